"""Hypersurfaces: normals, second fundamental form, line-of-curvature tests,
principal-direction tracing and ribbon construction.

The second fundamental form is ``II(X, Y) = <D_X Y, N_S>``, so the normal
curvature of a curve on ``S`` is ``II(E, E)`` and a surface is convex when
``II`` is positive definite for its stored orientation (inward normals for
ovaloids).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .curve import SampledCurve
from .exceptions import (CurveNotOnSurface, InconsistentTests, NumericalError,
                         SeamMismatch, ValidationError, WNotParallel)
from .frames import (FRAME_TOL, NormalField, OrthonormalFrameField, _complement_transport,
                     _gram_schmidt,
                     _inner, _norm, darboux_data, detect_direction_field, frenet_data,
                     parallel_frame_in_H, rotate_normal, rotation_angle_between,
                     unit_tangent)
from .manifold import contract, covariant_derivative_along, exp_map

ON_SURFACE_TOL = 1e-6
LOC_TOL = 1e-5
LAMBDA_MIN = 1e-8
QUANT_TOL = 1e-3
SEAM_LATTICE_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class ShapeData:
    """Second fundamental form along a curve in a g-orthonormal tangent basis.

    ``basis[n]`` holds ``m - 1`` orthonormal tangent vectors (rows) with the
    curve tangent first; ``second_fundamental_form[n]`` is the symmetric
    matrix of ``II`` in that basis.
    """

    basis: np.ndarray
    second_fundamental_form: np.ndarray
    principal_values: np.ndarray
    principal_directions: np.ndarray


@dataclass(frozen=True)
class LineOfCurvatureReport:
    verdict: bool
    residual: float
    eigen_residual: float
    max_angle: float
    tolerance: float

    def __bool__(self):
        return self.verdict


def _tangent_basis(E, N, g):
    """Orthonormal basis of ``N^perp`` starting with ``E`` (per node)."""
    n, m = E.shape
    out = np.empty((n, m - 1, m))
    out[:, 0] = E
    k = 1
    for c in np.eye(m):
        if k == m - 1:
            break
        w = np.broadcast_to(c, (n, m)).copy()
        for q in [N] + [out[:, j] for j in range(k)]:
            w -= _inner(w, g, q)[:, None] * q
        nw = _norm(w, g)
        if nw.min() < 1e-3:
            continue
        out[:, k] = w / nw[:, None]
        k += 1
    if k < m - 1:
        # rare: fall back to per-node completion
        for i in range(n):
            vecs = [E[i], N[i]]
            for c in np.eye(m):
                w = c.copy()
                for q in vecs:
                    w -= (w @ g[i] @ q) * q
                nw = np.sqrt(max(w @ g[i] @ w, 0.0))
                if nw > 1e-3:
                    vecs.append(w / nw)
            out[i, 1:] = np.array(vecs[2:m])
    return out


def _eigen_report(A, e=None):
    """Principal data plus the eigenvector residual of the first basis vector."""
    vals, vecs = np.linalg.eigh(A)
    e1 = np.zeros(A.shape[-1])
    e1[0] = 1.0
    Ae = A @ e1
    rq = np.einsum("ni,ni->n", Ae, np.broadcast_to(e1, Ae.shape))
    resid = np.linalg.norm(Ae - rq[:, None] * e1, axis=1)
    cosang = np.abs(vecs[:, 0, :]).max(axis=1)
    gaps = np.diff(vals, axis=1).min(axis=1) if A.shape[-1] > 1 else np.ones(len(A))
    angles = np.where(gaps > 1e-6, np.arccos(np.clip(cosang, -1.0, 1.0)), 0.0)
    return vals, vecs, resid, angles


class ImmersedHypersurface:
    """Oriented hypersurface of a chart manifold.

    Subclasses provide ``normal_along`` and ``shape_along``; ``orientation``
    (+1 or -1) multiplies the induced unit normal.
    """

    def __init__(self, M, orientation=1.0, name="surface"):
        self.M = M
        self.orientation = float(np.sign(orientation) or 1.0)
        self.name = name

    def normal_along(self, curve, tol=ON_SURFACE_TOL):
        raise NotImplementedError

    def shape_along(self, curve, tol=ON_SURFACE_TOL):
        raise NotImplementedError


class LevelSetSurface(ImmersedHypersurface):
    """Hypersurface ``{F = 0}`` with analytic gradient and Hessian.

    ``F``, ``grad`` and ``hess`` act on point batches ``(n, m)``. The
    unit normal is ``orientation * grad_g F / |grad_g F|``.
    """

    def __init__(self, M, F, grad, hess, orientation=1.0, name="level-set", param=None,
                 spec=None):
        super().__init__(M, orientation, name)
        self.F = F
        self.grad = grad
        self.hess = hess
        self.param = param
        self.spec = spec or {"kind": name}

    def flipped(self):
        return LevelSetSurface(self.M, self.F, self.grad, self.hess, -self.orientation,
                               self.name, self.param, self.spec)

    def distance(self, x):
        """First-order g-distance of ``x`` from the surface."""
        x = np.atleast_2d(x)
        dF = self.grad(x)
        ginv = self.M.inverse_metric_at(x)
        return np.abs(self.F(x)) / np.sqrt(np.einsum("ni,nij,nj->n", dF, ginv, dF))

    def project(self, x, iters=3):
        """Newton projection onto ``F = 0`` along the g-gradient."""
        x = np.array(np.atleast_2d(x), dtype=float)
        for _ in range(iters):
            dF = self.grad(x)
            ginv = self.M.inverse_metric_at(x)
            gradg = np.einsum("nij,nj->ni", ginv, dF)
            x -= (self.F(x) / np.einsum("ni,ni->n", dF, gradg))[:, None] * gradg
        return x

    def normal_at(self, x):
        x = np.atleast_2d(x)
        g = self.M.metric_at(x)
        gradg = np.einsum("nij,nj->ni", np.linalg.inv(g), self.grad(x))
        return self.orientation * gradg / _norm(gradg, g)[:, None]

    def second_fundamental_form_at(self, x, basis):
        """``II`` in the given tangent basis rows, ``-Hess_g F / |grad F|``."""
        x = np.atleast_2d(x)
        g = self.M.metric_at(x)
        dF = self.grad(x)
        gradg = np.einsum("nij,nj->ni", np.linalg.inv(g), dF)
        hess = self.hess(x) - np.einsum("nkij,nk->nij", self.M.christoffel_at(x), dF)
        II = -np.einsum("nai,nij,nbj->nab", basis, hess, basis)
        return self.orientation * II / _norm(gradg, g)[:, None, None]

    def _check_on(self, curve, tol):
        d = self.distance(curve.points)
        if d.max() > tol:
            raise CurveNotOnSurface(f"curve deviates from {self.name} by {d.max():.3e}", float(d.max()))

    def normal_along(self, curve, tol=ON_SURFACE_TOL):
        """Restriction of ``N_S`` to ``curve`` as a :class:`NormalField`.

        The tangential component (of the size of the curve's distance from
        the surface) is removed so the result is exactly normal to ``E``.
        """
        self._check_on(curve, tol)
        g = self.M.metric_at(curve.points)
        E = unit_tangent(self.M, curve, g)
        N = self.normal_at(curve.points)
        N = N - _inner(N, g, E)[:, None] * E
        return NormalField(N / _norm(N, g)[:, None])

    def shape_along(self, curve, tol=ON_SURFACE_TOL):
        self._check_on(curve, tol)
        g = self.M.metric_at(curve.points)
        E = unit_tangent(self.M, curve, g)
        N = self.normal_along(curve, tol).values
        basis = _tangent_basis(E, N, g)
        II = self.second_fundamental_form_at(curve.points, basis)
        vals, vecs, _, _ = _eigen_report(II)
        return ShapeData(basis, II, vals, vecs)

    def principal_direction(self, x, family, previous=None):
        """Unit principal direction (chart vector) at one point.

        ``family`` indexes the principal curvatures in ascending order.
        """
        if self.M.is_flat_chart and self.M.dim == 3:
            return self._principal_direction_flat3(np.ravel(x), family, previous)
        x = np.atleast_2d(x)
        g = self.M.metric_at(x)
        N = self.normal_at(x)
        seed = np.zeros_like(x)
        # any tangent seed; the basis only needs to span N^perp
        seed[0, int(np.argmin(np.abs(N[0])))] = 1.0
        seed -= _inner(seed, g, N)[:, None] * N
        seed /= _norm(seed, g)[:, None]
        basis = _tangent_basis(seed, N, g)
        II = self.second_fundamental_form_at(x, basis)[0]
        vals, vecs = np.linalg.eigh(II)
        gaps = np.diff(vals)
        scale = max(np.abs(vals).max(), 1e-12)
        if gaps.size and gaps.min() < 1e-3 * scale:
            raise NumericalError(f"umbilic region near x={x[0].tolist()}")
        d = vecs[:, family] @ basis[0]
        if previous is not None and d @ g[0] @ previous < 0:
            d = -d
        return d, vals


    def _principal_direction_flat3(self, x, family, previous):
        # same computation as the generic path, specialised to flat R^3
        grad = self.grad(x[None])[0]
        nrm = math.sqrt(grad @ grad)
        n = grad / nrm
        e = np.zeros(3)
        e[int(np.argmin(np.abs(n)))] = 1.0
        t1 = _cross3(n, e)
        t1 /= math.sqrt(t1 @ t1)
        B = np.array([t1, _cross3(n, t1)])
        II = -self.orientation * (B @ self.hess(x[None])[0] @ B.T) / nrm
        a, b, c = II[0, 0], II[0, 1], II[1, 1]
        half = 0.5 * (a - c)
        root = math.hypot(half, b)
        vals = np.array([0.5 * (a + c) - root, 0.5 * (a + c) + root])
        scale = max(abs(vals[0]), abs(vals[1]), 1e-12)
        if 2.0 * root < 1e-3 * scale:
            raise NumericalError(f"umbilic region near x={x.tolist()}")
        lam = vals[family]
        # eigenvector of [[a, b], [b, c]] for lam, from the better-conditioned row
        v = np.array([b, lam - a]) if abs(lam - a) > abs(lam - c) else np.array([lam - c, b])
        d = (v / math.sqrt(v @ v)) @ B
        if previous is not None and d @ previous < 0:
            d = -d
        return d, vals


def _cross3(u, v):
    return np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])


# -- built-in analytic surfaces -------------------------------------------------

def _quadric(M, diag, center, rhs, name, param=None, spec=None, mask=None):
    diag = np.asarray(diag, dtype=float)
    center = np.zeros(M.dim) if center is None else np.asarray(center, dtype=float)

    def F(x):
        y = x - center
        return np.sum(diag * y * y, axis=-1) - rhs

    def grad(x):
        return 2.0 * diag * (x - center)

    def hess(x):
        return np.broadcast_to(2.0 * np.diag(diag), np.shape(x)[:-1] + (M.dim, M.dim)).copy()

    return LevelSetSurface(M, F, grad, hess, name=name, param=param, spec=spec)


def round_sphere(M, radius=1.0, center=None):
    """Chart sphere ``|x - c| = r`` (a geodesic sphere when M is a
    conformal built-in and c = 0)."""
    def param(u):
        u = np.atleast_2d(u)
        th, ph = u[:, 0], u[:, 1]
        return radius * np.c_[np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
    return _quadric(M, np.ones(M.dim), center, radius ** 2, "sphere",
                    param if M.dim == 3 else None, {"kind": "sphere", "radius": radius})


def ellipsoid(M, semiaxes):
    a = np.asarray(semiaxes, dtype=float)
    if M.dim != len(a):
        raise ValidationError("ellipsoid needs one semiaxis per ambient dimension")

    def param(u):
        u = np.atleast_2d(u)
        th, ph = u[:, 0], u[:, 1]
        return np.c_[a[0] * np.sin(th) * np.cos(ph), a[1] * np.sin(th) * np.sin(ph), a[2] * np.cos(th)]
    return _quadric(M, 1.0 / a ** 2, None, 1.0, "ellipsoid", param if M.dim == 3 else None,
                    {"kind": "ellipsoid", "semiaxes": a.tolist()})


def cylinder(M, radius=1.0):
    """Round cylinder ``x^2 + y^2 = r^2`` about the z axis in R^3."""
    if M.dim != 3:
        raise ValidationError("cylinder is defined in 3 dimensions")
    return _quadric(M, [1.0, 1.0, 0.0], None, radius ** 2, "cylinder",
                    spec={"kind": "cylinder", "radius": radius})


def hyperplane(M, normal, offset=0.0):
    """Affine chart hyperplane ``<n, x> = offset``."""
    nvec = np.asarray(normal, dtype=float)

    def F(x):
        return x @ nvec - offset

    def grad(x):
        return np.broadcast_to(nvec, np.shape(x)).copy()

    def hess(x):
        return np.zeros(np.shape(x)[:-1] + (M.dim, M.dim))

    return LevelSetSurface(M, F, grad, hess, name="hyperplane",
                           spec={"kind": "hyperplane", "normal": nvec.tolist(), "offset": offset})


def torus(M, R=2.0, r=0.5):
    """Torus of revolution about the z axis, ``(rho - R)^2 + z^2 = r^2``."""
    if M.dim != 3:
        raise ValidationError("torus is defined in 3 dimensions")

    def F(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        return (rho - R) ** 2 + x[..., 2] ** 2 - r ** 2

    def grad(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        f = 2.0 * (rho - R) / rho
        return np.stack([f * x[..., 0], f * x[..., 1], 2.0 * x[..., 2]], axis=-1)

    def hess(x):
        X, Y = x[..., 0], x[..., 1]
        rho = np.hypot(X, Y)
        d = rho - R
        h = np.zeros(np.shape(x)[:-1] + (3, 3))
        h[..., 0, 0] = 2.0 * (X * X / rho ** 2 + d * Y * Y / rho ** 3)
        h[..., 1, 1] = 2.0 * (Y * Y / rho ** 2 + d * X * X / rho ** 3)
        h[..., 0, 1] = h[..., 1, 0] = 2.0 * (X * Y / rho ** 2 - d * X * Y / rho ** 3)
        h[..., 2, 2] = 2.0
        return h

    def param(u):
        u = np.atleast_2d(u)
        v, w = u[:, 0], u[:, 1]
        return np.c_[(R + r * np.cos(v)) * np.cos(w), (R + r * np.cos(v)) * np.sin(w), r * np.sin(v)]

    return LevelSetSurface(M, F, grad, hess, name="torus", param=param,
                           spec={"kind": "torus", "R": R, "r": r})


def from_spec(M, spec):
    """Build a surface from ``{"kind": ..., ...}``; ``"orientation": -1`` flips it."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError(f"bad surface spec: {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "ellipsoid":
            S = ellipsoid(M, spec["semiaxes"])
        elif kind == "sphere":
            S = round_sphere(M, spec.get("radius", 1.0), spec.get("center"))
        elif kind == "cylinder":
            S = cylinder(M, spec.get("radius", 1.0))
        elif kind == "torus":
            S = torus(M, spec.get("R", 2.0), spec.get("r", 0.5))
        elif kind == "hyperplane":
            S = hyperplane(M, spec["normal"], spec.get("offset", 0.0))
        else:
            raise ValidationError(f"unknown surface kind {kind!r}")
    except KeyError as exc:
        raise ValidationError(f"surface spec {kind!r} missing {exc}") from None
    return S.flipped() if spec.get("orientation", 1) < 0 else S


# -- tests on curves -----------------------------------------------------------

def normal_along(S, curve, tol=ON_SURFACE_TOL):
    return S.normal_along(curve, tol)


def is_line_of_curvature(M, curve, S, tol=LOC_TOL):
    """Line-of-curvature test by two routes.

    The primary residual is ``sup |T_g|`` for ``T_g`` the geodesic torsion
    vector relative to ``N_S``; the second route measures how far ``E`` is
    from an eigenvector of the shape operator. The verdicts must agree.
    """
    N = S.normal_along(curve)
    frame = parallel_frame_in_H(M, curve, N)
    data = darboux_data(M, curve, frame)
    g = M.metric_at(curve.points)
    residual = float(_norm(data.Tg_vec, g).max())
    shape = S.shape_along(curve)
    _, _, eres, angles = _eigen_report(shape.second_fundamental_form)
    eig_residual = float(eres.max())
    lo, hi = sorted([residual, eig_residual])
    if lo <= tol < hi and hi > 10.0 * tol:
        raise InconsistentTests(
            f"torsion-vector residual {residual:.3e} and eigenvector residual "
            f"{eig_residual:.3e} disagree at tolerance {tol:g}")
    return LineOfCurvatureReport(residual <= tol, residual, eig_residual,
                                 float(angles.max()), tol)


def is_convex_along(S, curve, lam_min=LAMBDA_MIN):
    """All principal curvatures along ``curve`` at least ``lam_min``."""
    shape = S.shape_along(curve)
    return bool(shape.principal_values.min() >= lam_min)


def is_well_positioned(M, curve, S, tol=1e-6, reference=None):
    """Whether ``N_S``, ``P`` and ``W(P)`` are coplanar at every node.

    Returns ``(verdict, residual)`` with the residual the largest 3x3 Gram
    determinant of the triple.
    """
    NS = S.normal_along(curve).values
    pd, frame, data, W = frenet_data(M, curve, reference=reference)
    g = M.metric_at(curve.points)
    trip = np.stack([NS, pd.P.values, W.values], axis=1)
    gram = np.einsum("nai,nij,nbj->nab", trip, g, trip)
    residual = float(np.abs(np.linalg.det(gram)).max())
    return residual <= tol, residual


# -- principal-direction streamlines ------------------------------------------

def _trace(S, x0, d0, family, h, n):
    x = np.array(x0, dtype=float)
    d = np.array(d0, dtype=float)
    pts = np.empty((n + 1, len(x)))
    pts[0] = x
    for i in range(n):
        k1, _ = S.principal_direction(x, family, d)
        k2, _ = S.principal_direction(x + 0.5 * h * k1, family, k1)
        k3, _ = S.principal_direction(x + 0.5 * h * k2, family, k2)
        k4, _ = S.principal_direction(x + h * k3, family, k3)
        x = S.project(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), iters=1)[0]
        d = k4
        pts[i + 1] = x
    return pts


def trace_line_of_curvature(S, x0, family=0, n_steps=2048, max_length=200.0,
                            probe_step=0.02, seam_tol=1e-8, max_refine=6):
    """Trace the closed line of curvature of ``S`` through ``x0``.

    RK4 on the unit principal-direction field with projection back onto
    ``S`` after each step. A coarse probe locates the first return to
    ``x0``; the loop length is then refined by retracing with exactly
    ``n_steps`` steps until the end point lands on ``x0``.

    ``family`` indexes the principal curvatures in ascending order. Only
    valid for Euclidean charts, where unit chart speed is unit speed.
    """
    x0 = S.project(np.asarray(x0, dtype=float))[0]
    d0, _ = S.principal_direction(x0, family)
    d0 = d0 / np.linalg.norm(d0)

    x, d = x0.copy(), d0.copy()
    s, prev_q, length = 0.0, 0.0, None
    while s < max_length:
        x_new = _trace(S, x, d, family, probe_step, 1)[-1]
        d, _ = S.principal_direction(x_new, family, x_new - x)
        q = (x_new - x0) @ d0
        s += probe_step
        if s > 4 * probe_step and prev_q < 0 <= q and np.linalg.norm(x_new - x0) < 10 * probe_step:
            length = s - probe_step * q / (q - prev_q)
            break
        prev_q, x = q, x_new
    if length is None:
        raise NumericalError("line of curvature did not close within max_length")

    for _ in range(max_refine):
        pts = _trace(S, x0, d0, family, length / n_steps, n_steps)
        q = (pts[-1] - x0) @ d0
        if abs(q) < 1e-12:
            break
        length -= q
    gap = float(np.linalg.norm(pts[-1] - x0))
    if gap > seam_tol:
        raise NumericalError(f"traced line of curvature fails to close: gap {gap:.3e}")
    pts[-1] = pts[0]
    return SampledCurve(np.linspace(0.0, length, n_steps + 1), pts, closed=True)


# -- ribbon construction ----------------------------------------------------------

class Ribbon(ImmersedHypersurface):
    """Hypersurface swept by geodesics normal to a rotated normal field.

    ``sigma(t, u) = exp_{gamma(t)}(u^1 H_1(theta) + u^2 H_2 + ...)`` where
    the frame ``H`` has ``H_1 = W(N)`` and is parallel in the complement
    of ``(E, N)``, and ``theta = -int tau_g``.
    """

    def __init__(self, M, curve, frame, theta, tau, u_values, lattice, total,
                 exp_steps=16, fd_step=1e-3, orientation=1.0):
        super().__init__(M, orientation, "ribbon")
        self.curve = curve
        self.base_frame = frame
        self.theta = theta
        self.tau = tau
        self.normal_theta, self.frame = rotate_normal(frame, theta)
        self.u_values = u_values
        self.lattice = lattice
        self.total = float(total)
        self.nearest_n = int(np.round(self.total / (2.0 * np.pi)))
        self.exp_steps = exp_steps
        self.fd_step = fd_step
        self.seam = {}
        self.verification = {}

    @property
    def u_max(self):
        return float(np.abs(self.u_values).max())

    def sigma(self, idx, u):
        """``sigma`` at grid nodes ``idx`` and offsets ``u`` (shape ``(..., m-2)``)."""
        idx = np.asarray(idx)
        u = np.asarray(u, dtype=float)
        v = np.einsum("...k,...ki->...i", u, self.frame.H[idx])
        return exp_map(self.M, self.curve.points[idx], v, steps=self.exp_steps)

    def _check_core(self, curve, tol):
        if len(curve.grid) != len(self.curve.grid):
            raise CurveNotOnSurface("curve is not the ribbon's core curve (grid differs)")
        dev = float(np.abs(curve.points - self.curve.points).max())
        if dev > tol:
            raise CurveNotOnSurface(f"curve deviates from the ribbon core by {dev:.3e}", dev)

    def coordinate_tangents(self):
        """``d sigma / du^j`` at ``u = 0`` by central differences, plus the
        mixed and pure second differences in ``u``."""
        n = len(self.curve.grid)
        r = self.frame.rank
        h = self.fd_step
        idx = np.arange(n)
        eye = np.eye(r)
        center = self.curve.points
        du = np.empty((n, r, self.M.dim))
        duu = np.empty((n, r, r, self.M.dim))
        plus = [self.sigma(idx, np.broadcast_to(h * eye[j], (n, r))) for j in range(r)]
        minus = [self.sigma(idx, np.broadcast_to(-h * eye[j], (n, r))) for j in range(r)]
        for j in range(r):
            du[:, j] = (plus[j] - minus[j]) / (2 * h)
            duu[:, j, j] = (plus[j] - 2 * center + minus[j]) / h ** 2
            for k in range(j):
                pp = self.sigma(idx, np.broadcast_to(h * (eye[j] + eye[k]), (n, r)))
                pm = self.sigma(idx, np.broadcast_to(h * (eye[j] - eye[k]), (n, r)))
                mp = self.sigma(idx, np.broadcast_to(h * (eye[k] - eye[j]), (n, r)))
                mm = self.sigma(idx, np.broadcast_to(-h * (eye[j] + eye[k]), (n, r)))
                duu[:, j, k] = duu[:, k, j] = (pp - pm - mp + mm) / (4 * h * h)
        return du, duu

    def normal_along(self, curve, tol=ON_SURFACE_TOL):
        """Ribbon normal along its core from finite-difference tangents."""
        self._check_core(curve, tol)
        M = self.M
        g = M.metric_at(curve.points)
        du, _ = self.coordinate_tangents()
        T = np.concatenate([curve.velocity()[:, None], du], axis=1)  # (n, m-1, m)
        m = M.dim
        # covector annihilating all tangents: signed maximal minors
        omega = np.empty((len(T), m))
        for i in range(m):
            cols = [c for c in range(m) if c != i]
            omega[:, i] = (-1) ** i * np.linalg.det(T[:, :, cols])
        N = np.einsum("nij,nj->ni", np.linalg.inv(g), omega)
        N /= _norm(N, g)[:, None]
        N *= np.sign(_inner(N[0], g[0], self.normal_theta.values[0])) * self.orientation
        return NormalField(N)

    def shape_along(self, curve, tol=ON_SURFACE_TOL):
        self._check_core(curve, tol)
        M = self.M
        g = M.metric_at(curve.points)
        gam = M.christoffel_at(curve.points)
        N = self.normal_along(curve).values
        du, duu = self.coordinate_tangents()
        v = curve.velocity()
        r = du.shape[1]
        tang = np.concatenate([v[:, None], du], axis=1)
        second = np.empty((len(v), r + 1, r + 1, M.dim))
        second[:, 0, 0] = curve.acceleration_param()
        for j in range(r):
            dtu = curve.differentiate(du[:, j])
            second[:, 0, j + 1] = second[:, j + 1, 0] = dtu
        second[:, 1:, 1:] = duu
        cov = second + np.einsum("nkij,nai,nbj->nabk", gam, tang, tang)
        II = np.einsum("nabk,nkl,nl->nab", cov, g, N)
        I = np.einsum("nai,nij,nbj->nab", tang, g, tang)
        L = np.linalg.cholesky(I)
        Linv = np.linalg.inv(L)
        IIon = Linv @ II @ np.swapaxes(Linv, 1, 2)
        basis = np.einsum("nab,nbi->nai", Linv, tang)
        vals, vecs, _, _ = _eigen_report(IIon)
        return ShapeData(basis, IIon, vals, vecs)


def _simpson(values, grid):
    return float(simpson(values, x=grid))


def construct_ribbon(M, curve, N, u_max=None, n_u=5, closed_tol=QUANT_TOL,
                     tol=FRAME_TOL, exp_steps=16, fd_step=1e-3, verify=True):
    """Realize ``curve`` as a line of curvature of a hypersurface.

    Parameters
    ----------
    N : NormalField
        Torsion-defining normal whose direction field ``W(N)`` is parallel
        in the complement distribution.
    u_max : float, optional
        Half-width of the lattice in each ``u`` direction; defaults to
        ``0.1 * min(length, 1 / max curvature)``.
    closed_tol : float
        For closed curves, allowed distance of the total geodesic torsion
        from ``2 pi Z``.

    Raises
    ------
    WNotParallel, NotTorsionDefining, SeamMismatch
    """
    Nv = N.values if isinstance(N, NormalField) else np.asarray(N, dtype=float)
    g = M.metric_at(curve.points)
    m = M.dim
    frame0 = parallel_frame_in_H(M, curve, Nv)
    data0 = darboux_data(M, curve, frame0)
    W = detect_direction_field(M, data0, "torsion", reference="frame" if m == 3 else None)

    DW = covariant_derivative_along(M, curve, W.values)
    DW = (DW - _inner(DW, g, frame0.E)[:, None] * frame0.E
          - _inner(DW, g, Nv)[:, None] * Nv)
    w_res = float(_norm(DW, g).max())
    if w_res > tol:
        raise WNotParallel(f"W(N) is not parallel in H: residual {w_res:.3e}", w_res)

    H = W.values[:, None, :]
    if m > 3:
        b0 = _gram_schmidt([frame0.E[0], Nv[0], W.values[0]], g[0], list(frame0.H[0]))
        rest = _complement_transport(M, curve, [frame0.E, Nv, W.values], b0[3:])
        H = np.concatenate([H, rest], axis=1)
    frame = OrthonormalFrameField(curve, frame0.E, H, Nv)
    tau = W.scalar
    total = _simpson(tau, curve.grid)
    if curve.closed:
        n = int(np.round(total / (2.0 * np.pi)))
        miss = abs(total - 2.0 * np.pi * n)
        if miss > closed_tol:
            raise SeamMismatch(
                f"total geodesic torsion {total:.9g} is {miss:.3e} away from 2*pi*{n}",
                total, n)
    theta = -curve.antiderivative(tau)

    if u_max is None:
        kmax = float(_norm(covariant_derivative_along(M, curve, frame.E), g).max())
        u_max = 0.1 * min(curve.length, 1.0 / kmax if kmax > 1e-12 else np.inf)
    u_values = np.linspace(-u_max, u_max, n_u)
    r = m - 2
    mesh = np.stack(np.meshgrid(*([u_values] * r), indexing="ij"), axis=-1).reshape(-1, r)
    ribbon = Ribbon(M, curve, frame, theta, tau, u_values, None, total,
                    exp_steps=exp_steps, fd_step=fd_step)
    nt = len(curve.grid)
    idx = np.repeat(np.arange(nt), len(mesh))
    uu = np.tile(mesh, (nt, 1))
    lattice = ribbon.sigma(idx, uu).reshape((nt,) + (n_u,) * r + (m,))
    ribbon.lattice = lattice

    if curve.closed:
        line = np.zeros((n_u, r))
        line[:, 0] = u_values
        seam = float(np.abs(ribbon.sigma(np.full(n_u, nt - 1), line)
                            - ribbon.sigma(np.zeros(n_u, dtype=int), line)).max())
        Hs = ribbon.frame.H
        span_res = 0.0
        if r > 1:
            P0 = Hs[0, 1:]
            Pl = Hs[-1, 1:]
            G = np.einsum("ai,ij,bj->ab", Pl, g[0], P0)
            span_res = float(np.abs(np.linalg.svd(G, compute_uv=False) - 1.0).max())
        ribbon.seam = {"lattice_distance": seam, "span_residual": span_res}
        if seam > SEAM_LATTICE_TOL:
            raise SeamMismatch(f"ribbon seam does not close: lattice gap {seam:.3e}",
                               total, ribbon.nearest_n)

    if verify:
        NR = ribbon.normal_along(curve).values
        loc = is_line_of_curvature(M, curve, ribbon, tol=1e-4)
        rot = rotation_angle_between(M, NormalField(Nv), NormalField(NR), frame)
        ribbon.verification = {
            "core_distance": float(np.abs(lattice[(slice(None),) + (n_u // 2,) * r] - curve.points).max()),
            "normal_mismatch": float(_norm(NR - ribbon.normal_theta.values, g).max()),
            "line_of_curvature_residual": loc.residual,
            "eigen_residual": loc.eigen_residual,
            "line_of_curvature": bool(loc.verdict),
            "winding": rot.winding,
            "theta_prime_mismatch": float(np.abs(curve.differentiate(rot.theta) + tau).max()),
        }
    return ribbon
