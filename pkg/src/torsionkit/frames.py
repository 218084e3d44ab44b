"""Adapted frames, Darboux curvatures and the normal-rotation law.

All vector fields along a curve are arrays of shape ``(K+1, m)`` sampled on
the curve grid; a frame stores its ``m - 2`` complement fields as
``H[:, j, :]``. Inner products are taken with the ambient metric.

Sign conventions
----------------
Scalar geodesic torsions and curvatures are only defined up to the sign of
the unit direction field they are measured against. In dimension 3 the
complement distribution is a line bundle and the frame ``(E, H_1, N)`` is
oriented positively with respect to the chart, which reproduces the
classical signs (``tau > 0`` for a right-handed helix). In higher
dimension the direction field starts with ``<W, T_g> > 0`` at the first
node where ``T_g`` is nonzero and is continued continuously from there.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (FrenetViolation, NonOrientableDirection, NotARotation,
                         NotTorsionDefining, ValidationError)
from .manifold import (contract, covariant_derivative_along, rk4_linear)

EPS_DIR = 1e-7
KAPPA_MIN = 1e-6
FRAME_TOL = 1e-5
MAX_DIRECTION_JUMP = np.pi / 4


@dataclass(frozen=True)
class NormalField:
    """Unit vector field along a curve, g-orthogonal to its tangent."""

    values: np.ndarray

    def __neg__(self):
        return NormalField(-self.values)


@dataclass(frozen=True, eq=False)
class OrthonormalFrameField:
    """Adapted frame ``(E, H_1, ..., H_{m-2}, N)`` along ``curve``."""

    curve: object
    E: np.ndarray
    H: np.ndarray
    N: np.ndarray

    @property
    def rank(self):
        return self.H.shape[1]

    def stacked(self):
        """All frame vectors as rows: shape ``(K+1, m, m)``."""
        return np.concatenate([self.E[:, None], self.H, self.N[:, None]], axis=1)

    def gram(self, M):
        F = self.stacked()
        g = M.metric_at(self.curve.points)
        return np.einsum("nai,nij,nbj->nab", F, g, F)

    def orientation(self):
        """Sign of the chart determinant of the frame at each node."""
        return np.sign(np.linalg.det(self.stacked()))


@dataclass(frozen=True, eq=False)
class DarbouxData:
    """Darboux coefficients of a curve relative to a frame.

    ``kg`` and ``tg`` have shape ``(K+1, m-2)``; ``connection[:, j, k]`` is
    ``<D_t H_j, H_k>`` (``None`` when not measured).
    """

    frame: OrthonormalFrameField
    kg: np.ndarray
    kn: np.ndarray
    tg: np.ndarray
    Kg_vec: np.ndarray
    Kn_vec: np.ndarray
    Tg_vec: np.ndarray
    connection: np.ndarray = None
    residuals: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class DirectionField:
    """Continuous unit field along a curve inside the complement distribution.

    ``coeffs`` are the components in the frame's ``H_j``; ``scalar`` is the
    signed function ``<X, W>`` for the vector field ``X`` the direction was
    detected from (the geodesic torsion when detecting ``W(N)``).
    """

    values: np.ndarray
    coeffs: np.ndarray
    scalar: np.ndarray
    zero_mask: np.ndarray
    sign_convention: dict
    seam_flip: bool = False


@dataclass(frozen=True)
class PrincipalData:
    kappa: np.ndarray
    P: NormalField
    acceleration: np.ndarray


@dataclass(frozen=True, eq=False)
class RotationAngle:
    """Continuous rotation angle with winding diagnostics."""

    theta: np.ndarray
    winding: float
    nearest_n: int
    residual: float
    axis: np.ndarray = None

    @property
    def delta(self):
        return float(self.theta[-1] - self.theta[0])


def _check_grid(curve, *fields):
    n = len(curve.grid)
    for f in fields:
        if np.shape(f)[0] != n:
            raise ValidationError(f"field with {np.shape(f)[0]} samples on a grid of {n} nodes")


def _inner(u, g, v):
    return np.einsum("...i,...ij,...j->...", u, g, v)


def _norm(v, g):
    return np.sqrt(np.maximum(_inner(v, g, v), 0.0))


def unit_tangent(M, curve, g=None):
    if g is None:
        g = M.metric_at(curve.points)
    v = curve.velocity()
    return v / _norm(v, g)[:, None]


def acceleration(M, curve):
    """``D_t gamma'`` from the curve spline's first and second derivatives."""
    gam = M.christoffel_at(curve.points)
    v = curve.velocity()
    return curve.acceleration_param() + contract(gam, v, v)



def project(M, frame, X):
    """Split ``X`` into its components along ``span(H_j)``, ``N`` and ``E``.

    Returns ``(X_H, X_N, X_E)``; the three parts sum to ``X`` when the frame
    is orthonormal.
    """
    X = np.asarray(X, dtype=float)
    _check_grid(frame.curve, X)
    g = M.metric_at(frame.curve.points)
    xe = _inner(X, g, frame.E)[:, None] * frame.E
    xn = _inner(X, g, frame.N)[:, None] * frame.N
    c = np.einsum("ni,nij,nkj->nk", X, g, frame.H)
    xh = np.einsum("nk,nki->ni", c, frame.H)
    return xh, xn, xe


def _gram_schmidt(vectors, g, basis=None):
    """Extend g-orthonormal ``vectors`` (at one point) to a full basis."""
    m = g.shape[0]
    out = [v / np.sqrt(v @ g @ v) for v in vectors]
    candidates = list(basis) if basis is not None else []
    candidates += list(np.eye(m))
    for c in candidates:
        if len(out) == m:
            break
        w = np.array(c, dtype=float)
        for q in out:
            w = w - (w @ g @ q) * q
        nw = np.sqrt(max(w @ g @ w, 0.0))
        if nw > 1e-6:
            out.append(w / nw)
    return np.array(out)


def _orthonormalize_complement(fixed, H, g):
    """Project ``H`` off the fixed fields and re-orthonormalize, node-wise."""
    H = H.copy()
    for F in fixed:
        H -= _inner(H, g[:, None], F[:, None])[..., None] * F[:, None]
    for j in range(H.shape[1]):
        for k in range(j):
            H[:, j] -= _inner(H[:, j], g, H[:, k])[:, None] * H[:, k]
        H[:, j] /= _norm(H[:, j], g)[:, None]
    return H


def _oriented_complement_3d(E, N, g, sign=1.0):
    """Unit ``H`` with ``(E, H, N)`` positively oriented, for m = 3."""
    ginv = np.linalg.inv(g)
    h = np.einsum("nij,nj->ni", ginv, np.cross(N, E))
    h /= _norm(h, g)[:, None]
    det = np.linalg.det(np.stack([E, h, N], axis=1))
    return sign * np.sign(det)[:, None] * h


def _complement_transport(M, curve, fixed, initial):
    """Transport a frame of the complement of ``fixed`` along ``curve``.

    Each ``H`` solves ``D_t H = sum_F <D_t H, F> F`` over the fixed fields
    ``F``, i.e. it has no derivative component inside the complement.
    """
    grid = curve.grid
    mid = 0.5 * (grid[1:] + grid[:-1])

    def generator(points, velocity, fields, dfields):
        g = M.metric_at(points)
        a = -np.einsum("nkij,ni->nkj", M.christoffel_at(points), velocity)
        for F, DF in zip(fields, dfields):
            # <D_t H, F> = -<H, D_t F>
            a -= np.einsum("nk,nj->nkj", F, np.einsum("ni,nij->nj", DF, g))
        return a

    fields_n = [F for F in fixed]
    dfields_n = [covariant_derivative_along(M, curve, F) for F in fixed]
    x_mid, v_mid = curve(mid), curve(mid, 1)
    gam_mid = M.christoffel_at(x_mid)
    fields_m = [curve.interpolate(F, mid) for F in fixed]
    dfields_m = [curve.interpolate(F, mid, 1) + contract(gam_mid, v_mid, Fm)
                 for F, Fm in zip(fixed, fields_m)]
    a_nodes = generator(curve.points, curve.velocity(), fields_n, dfields_n)
    a_mid = generator(x_mid, v_mid, fields_m, dfields_m)
    Y = rk4_linear(grid, a_nodes, a_mid, np.asarray(initial, dtype=float).T)
    H = np.swapaxes(Y, 1, 2)
    g = M.metric_at(curve.points)
    return _orthonormalize_complement(fixed, H, g)


def parallel_frame_in_H(M, curve, N, initial=None):
    """Frame whose ``H_j`` are parallel for the connection induced on
    ``H = (E + N)^perp``.

    Parameters
    ----------
    N : NormalField or ndarray
    initial : sequence of vectors, optional
        Preferred leading directions for ``H_1, H_2, ...`` at ``t = 0``;
        completed by Gram-Schmidt against the standard basis.

    Notes
    -----
    Without ``initial`` the frame is oriented so that ``(E, H, N)`` has
    positive chart determinant at ``t = 0``. For ``m = 3`` the complement
    is a line and ``H_1`` is computed in closed form at every node.
    """
    Nv = N.values if isinstance(N, NormalField) else np.asarray(N, dtype=float)
    _check_grid(curve, Nv)
    m = curve.dim
    g = M.metric_at(curve.points)
    E = unit_tangent(M, curve, g)
    if m == 2:
        return OrthonormalFrameField(curve, E, np.zeros((len(E), 0, 2)), Nv)

    basis0 = _gram_schmidt([E[0], Nv[0]], g[0], initial)
    H0 = basis0[2:]
    if initial is None:
        det = np.linalg.det(np.vstack([E[0], H0, Nv[0]]))
        if det < 0:
            H0[-1] = -H0[-1]
    if m == 3:
        h = _oriented_complement_3d(E, Nv, g)
        h *= np.sign(_inner(h[0], g[0], H0[0]))
        return OrthonormalFrameField(curve, E, h[:, None, :], Nv)
    H = _complement_transport(M, curve, [E, Nv], H0)
    return OrthonormalFrameField(curve, E, H, Nv)


def darboux_data(M, curve, frame):
    """Geodesic curvature, normal curvature and geodesic torsion vectors.

    ``K_g = pi_H D_t E``, ``K_n = pi_N D_t E`` and ``T_g = -pi_H D_t N``,
    with coefficient functions read off in ``frame``.
    """
    _check_grid(curve, frame.E, frame.N)
    g = M.metric_at(curve.points)
    DE = acceleration(M, curve)
    DN = covariant_derivative_along(M, curve, frame.N)
    H = frame.H
    kg = np.einsum("ni,nij,nkj->nk", DE, g, H)
    kn = _inner(DE, g, frame.N)
    tg = -np.einsum("ni,nij,nkj->nk", DN, g, H)
    Kg = np.einsum("nk,nki->ni", kg, H)
    Kn = kn[:, None] * frame.N
    Tg = np.einsum("nk,nki->ni", tg, H)

    conn = np.empty((len(g), frame.rank, frame.rank))
    for j in range(frame.rank):
        DH = covariant_derivative_along(M, curve, H[:, j])
        conn[:, j, :] = np.einsum("ni,nij,nkj->nk", DH, g, H)

    res_t = _norm(DE - Kg - Kn, g).max()
    res_n = _norm(DN + kn[:, None] * frame.E + Tg, g).max()
    return DarbouxData(frame, kg, kn, tg, Kg, Kn, Tg, conn,
                       {"tangent_ode": float(res_t), "normal_ode": float(res_n)})


def principal_normal(M, curve, kappa_min=KAPPA_MIN):
    """Curvature ``kappa = |D_t E|`` and principal normal ``P = D_t E / kappa``.

    Raises
    ------
    FrenetViolation
        If ``kappa`` falls below ``kappa_min``; the offending parameter
        intervals are attached.
    """
    g = M.metric_at(curve.points)
    E = unit_tangent(M, curve, g)
    DE = acceleration(M, curve)
    kappa = _norm(DE, g)
    low = kappa < kappa_min
    if np.any(low):
        raise FrenetViolation(
            f"curvature below {kappa_min:g} (min {kappa.min():.3e})",
            _mask_intervals(curve.grid, low))
    P = DE - _inner(DE, g, E)[:, None] * E
    P /= _norm(P, g)[:, None]
    return PrincipalData(kappa, NormalField(P), DE)


def _mask_intervals(grid, mask):
    out = []
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(int), [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        out.append((float(grid[a]), float(grid[b - 1])))
    return out


def _continue_directions(coeffs, eps, ref_coeffs=None, grid=None):
    """Sign-continued unit directions of a coefficient field.

    Where ``|coeffs| <= eps`` the previous direction is held (parallel
    continuation, exact when the frame is parallel in H).
    """
    n, r = coeffs.shape
    norms = np.linalg.norm(coeffs, axis=1)
    nz = norms > eps
    w = np.zeros((n, r))
    if not np.any(nz):
        start = ref_coeffs[0] if ref_coeffs is not None else np.eye(r)[0]
        w[:] = start / np.linalg.norm(start)
        return w, ~nz, "parallel continuation (field vanishes identically)"
    i0 = int(np.argmax(nz))
    u0 = coeffs[i0] / norms[i0]
    if ref_coeffs is not None:
        rule = "aligned with reference direction"
        if u0 @ ref_coeffs[i0] < 0:
            u0 = -u0
    else:
        rule = "positive against the field at its first nonzero node"
    w[: i0 + 1] = u0
    prev = u0
    cos_max = np.cos(MAX_DIRECTION_JUMP)
    for i in range(i0 + 1, n):
        if nz[i]:
            cand = coeffs[i] / norms[i]
            d = cand @ prev
            if d < 0:
                cand, d = -cand, -d
            if d < cos_max:
                where = None if grid is None else float(grid[i])
                raise NotTorsionDefining(
                    f"direction jumps by {np.degrees(np.arccos(min(d, 1.0))):.1f} deg"
                    + ("" if where is None else f" at t={where:.6g}"), where)
            prev = cand
        w[i] = prev
    return w, ~nz, rule


def detect_direction_field(M, data, which="torsion", reference=None, eps=EPS_DIR,
                           strict_seam=False):
    """Continuous unit field parallel to ``T_g`` (or ``K_g``).

    Parameters
    ----------
    data : DarbouxData
    which : {"torsion", "curvature"}
        Detect ``W(N)`` from ``T_g`` or ``V(N)`` from ``K_g``.
    reference : None, "frame" or ndarray
        Fixes the global sign: ``"frame"`` aligns with ``H_1``, an array
        aligns with the given field; ``None`` makes the scalar positive at
        the first node where the field is nonzero.
    strict_seam : bool
        Raise :class:`NonOrientableDirection` instead of flagging a seam
        sign flip on closed curves.
    """
    frame = data.frame
    coeffs = data.tg if which == "torsion" else data.kg
    g = M.metric_at(frame.curve.points)
    if reference is None:
        ref = None
    elif isinstance(reference, str):
        if reference != "frame":
            raise ValidationError(f"unknown reference {reference!r}")
        ref = np.zeros_like(coeffs)
        ref[:, 0] = 1.0
    else:
        ref = np.einsum("ni,nij,nkj->nk", np.asarray(reference), g, frame.H)
    w, zero, rule = _continue_directions(coeffs, eps, ref, frame.curve.grid)
    W = np.einsum("nk,nki->ni", w, frame.H)
    scalar = np.einsum("nk,nk->n", coeffs, w)
    flip = False
    if frame.curve.closed:
        flip = bool(_inner(W[0], g[0], W[-1]) < 0)
        if flip and strict_seam:
            raise NonOrientableDirection("direction field returns with opposite sign at the seam")
    return DirectionField(W, w, scalar, zero, {"rule": rule, "eps": eps}, flip)


def rotate_normal(frame, theta):
    """Rotate ``N`` towards ``-H_1`` by ``theta``.

    ``N(theta) = -sin(theta) H_1 + cos(theta) N`` and
    ``H_1(theta) = cos(theta) H_1 + sin(theta) N``; the other ``H_j`` are
    unchanged.
    """
    theta = np.broadcast_to(np.asarray(theta, dtype=float), frame.N.shape[:1])
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    H1 = frame.H[:, 0]
    Nt = -s * H1 + c * frame.N
    H = frame.H.copy()
    H[:, 0] = c * H1 + s * frame.N
    return NormalField(Nt), OrthonormalFrameField(frame.curve, frame.E, H, Nt)


def rotated_darboux_via_lemma(data, theta, mu=None, theta_prime=None, strict=False,
                              tol=FRAME_TOL):
    """Darboux data relative to ``N(theta)`` from the rotation law alone.

    ``kg1(theta) = kg1 c + kn s``, ``kn(theta) = -kg1 s + kn c``,
    ``tg1(theta) = theta' + tg1`` and ``tg_j(theta) = tg_j c - mu_j s`` for
    ``j >= 2``, where ``mu_j = <D_t H_j, H_1>``.

    ``mu`` defaults to the measured connection of ``data``; with
    ``strict=True`` it must vanish (parallel frame) within ``tol``.
    """
    frame = data.frame
    curve = frame.curve
    theta = np.broadcast_to(np.asarray(theta, dtype=float), data.kn.shape).copy()
    _check_grid(curve, theta)
    if theta_prime is None:
        theta_prime = curve.differentiate(theta)
    r = frame.rank
    if mu is None:
        mu = data.connection[:, 1:, 0] if r > 1 else np.zeros((len(theta), 0))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (len(theta), max(r - 1, 0)))
    if strict and mu.size and np.abs(mu).max() > tol:
        raise ValidationError(f"frame not parallel in H: max |mu| = {np.abs(mu).max():.3e}")
    c, s = np.cos(theta), np.sin(theta)
    kg = data.kg.copy()
    tg = data.tg.copy()
    kg[:, 0] = data.kg[:, 0] * c + data.kn * s
    kn = -data.kg[:, 0] * s + data.kn * c
    tg[:, 0] = theta_prime + data.tg[:, 0]
    if r > 1:
        tg[:, 1:] = data.tg[:, 1:] * c[:, None] - mu * s[:, None]
    Nt, ft = rotate_normal(frame, theta)
    Kg = np.einsum("nk,nki->ni", kg, ft.H)
    Tg = np.einsum("nk,nki->ni", tg, ft.H)
    return DarbouxData(ft, kg, kn, tg, Kg, kn[:, None] * Nt.values, Tg)


def rotation_angle_between(M, N, Z, frame, eps=EPS_DIR, axis_reference=None):
    """Rotation angle ``theta`` with ``Z = -sin(theta) H + cos(theta) N``.

    ``H`` is the sign-continued unit direction of the H-component of ``Z``;
    in dimension 3 it is the frame's ``H_1``. Returns a
    :class:`RotationAngle` whose ``axis`` holds ``H``.
    """
    Nv = N.values if isinstance(N, NormalField) else np.asarray(N, dtype=float)
    Zv = Z.values if isinstance(Z, NormalField) else np.asarray(Z, dtype=float)
    curve = frame.curve
    _check_grid(curve, Nv, Zv)
    g = M.metric_at(curve.points)
    if np.abs(_inner(Zv, g, frame.E)).max() > 1e-6:
        raise NotARotation("Z is not orthogonal to the tangent")
    coeffs = np.einsum("ni,nij,nkj->nk", Zv, g, frame.H)
    if axis_reference is None and frame.rank == 1:
        ref = np.ones_like(coeffs)
    elif axis_reference is not None:
        ref = np.einsum("ni,nij,nkj->nk", np.asarray(axis_reference), g, frame.H)
    else:
        ref = None
    try:
        w, _, _ = _continue_directions(coeffs, eps, ref, curve.grid)
    except NotTorsionDefining as exc:
        raise NotARotation(f"no continuous rotation axis: {exc}") from None
    H = np.einsum("nk,nki->ni", w, frame.H)
    theta = np.unwrap(np.arctan2(-_inner(Zv, g, H), _inner(Zv, g, Nv)))
    winding = float((theta[-1] - theta[0]) / (2.0 * np.pi))
    n = int(np.round(winding))
    return RotationAngle(theta, winding, n, abs(winding - n), H)


def is_parallel_rotation(M, curve, N, Z, frame=None, tol=FRAME_TOL):
    """Whether ``Z`` is a parallel rotation of ``N``.

    Returns ``(verdict, residual)`` with the residual
    ``sup |pi_H D_t H|`` for the rotation axis ``H``.
    """
    if frame is None:
        frame = parallel_frame_in_H(M, curve, N)
    rot = rotation_angle_between(M, N, Z, frame)
    H = rot.axis
    g = M.metric_at(curve.points)
    DH = covariant_derivative_along(M, curve, H)
    DH = (DH - _inner(DH, g, frame.E)[:, None] * frame.E
          - _inner(DH, g, frame.N)[:, None] * frame.N)
    residual = float(_norm(DH, g).max())
    return residual <= tol, residual


@dataclass(frozen=True, eq=False)
class ThreeDimensionalReport:
    verdict: bool
    residuals: dict
    tau: np.ndarray
    kappa: np.ndarray
    P: NormalField
    W: DirectionField
    frame: OrthonormalFrameField
    darboux: DarbouxData


def frenet_data(M, curve, kappa_min=KAPPA_MIN, eps=EPS_DIR, reference=None):
    """Principal normal, adapted frame, Darboux data and ``W(P)`` in one pass.

    ``reference`` fixes the sign of ``W(P)`` (see
    :func:`detect_direction_field`); in dimension 3 it defaults to the
    oriented frame, giving the classical torsion sign.
    """
    pd = principal_normal(M, curve, kappa_min)
    frame = parallel_frame_in_H(M, curve, pd.P)
    data = darboux_data(M, curve, frame)
    if reference is None and curve.dim == 3:
        reference = "frame"
    W = detect_direction_field(M, data, "torsion", reference=reference, eps=eps)
    return pd, frame, data, W


def is_three_dimensional(M, curve, tol=FRAME_TOL, kappa_min=KAPPA_MIN):
    """Check the closed Frenet system with one curvature and one torsion.

    Builds ``(E, W(P), H_2, ...)`` with the ``H_j`` parallel in the
    complement of ``W(P)`` and measures the residuals of
    ``D_t E = kappa P``, ``D_t W = tau P``, ``D_t H_j = 0`` and
    ``D_t P = -kappa E - tau W``.
    """
    pd, frame, data, W = frenet_data(M, curve, kappa_min)
    g = M.metric_at(curve.points)
    E, P, Wv = frame.E, pd.P.values, W.values
    tau = W.scalar
    kappa = pd.kappa
    DE = pd.acceleration
    DW = covariant_derivative_along(M, curve, Wv)
    DP = covariant_derivative_along(M, curve, P)
    res = {
        "tangent": float(_norm(DE - kappa[:, None] * P, g).max()),
        "torsion_direction": float(_norm(DW - tau[:, None] * P, g).max()),
        "principal_normal": float(_norm(DP + kappa[:, None] * E + tau[:, None] * Wv, g).max()),
        "complement": 0.0,
    }
    m = curve.dim
    H = Wv[:, None, :]
    if m > 3:
        basis0 = _gram_schmidt([E[0], P[0], Wv[0]], g[0], list(frame.H[0]))
        rest = _complement_transport(M, curve, [E, P, Wv], basis0[3:])
        worst = 0.0
        for j in range(rest.shape[1]):
            DH = covariant_derivative_along(M, curve, rest[:, j])
            worst = max(worst, float(_norm(DH, g).max()))
        res["complement"] = worst
        H = np.concatenate([H, rest], axis=1)
    verdict = all(v <= tol for v in res.values())
    f3 = OrthonormalFrameField(curve, E, H, P)
    return ThreeDimensionalReport(verdict, res, tau, kappa, pd.P, W, f3, data)
