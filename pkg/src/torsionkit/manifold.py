"""Riemannian manifolds in a single chart.

A :class:`ChartManifold` wraps a metric field ``g(x)`` on an open subset of
R^m together with its Levi-Civita Christoffel symbols, and provides the
three ODE-backed primitives everything else is built on: covariant
differentiation along a sampled curve, parallel transport, and the
exponential map.

Array conventions: points and vectors carry their coordinate index last, so
a batch of points has shape ``(n, m)``, metrics ``(n, m, m)`` and
Christoffel arrays ``(n, m, m, m)`` indexed ``[.., k, i, j]`` for
``Gamma^k_ij``.
"""

import numpy as np

from .exceptions import ChartExitError, MetricError, ValidationError

FD_STEP = 1e-5
SYMMETRY_RTOL = 1e-10


class ChartManifold:
    """Riemannian metric on a single coordinate chart.

    Parameters
    ----------
    dim : int
        Ambient dimension ``m >= 2``.
    metric : callable
        Maps points of shape ``(..., m)`` to metric components ``(..., m, m)``.
        If ``vectorized`` is False it is called one point at a time.
    christoffel : callable or None
        Analytic ``Gamma^k_ij``, same calling convention as ``metric`` with
        output ``(..., m, m, m)``. ``None`` selects central finite
        differences of the metric with step ``fd_step``.
    domain : callable or None
        Predicate on a batch of points ``(n, m) -> (n,) bool``; ``None``
        means the chart is all of R^m.
    """

    def __init__(self, dim, metric, christoffel=None, *, fd_step=FD_STEP,
                 domain=None, vectorized=True, name="custom", spec=None):
        if int(dim) < 2:
            raise ValidationError(f"dimension must be >= 2, got {dim}")
        if fd_step <= 0:
            raise ValidationError("finite-difference step must be positive")
        self.dim = int(dim)
        self._metric = metric
        self._christoffel = christoffel
        self.fd_step = float(fd_step)
        self._domain = domain
        self._vectorized = vectorized
        self.name = name
        self.spec = spec if spec is not None else {"kind": name, "dim": self.dim}

    def __repr__(self):
        return f"ChartManifold({self.name!r}, dim={self.dim})"

    @property
    def christoffel_source(self):
        if self._christoffel is None:
            return ("finite-difference", self.fd_step)
        return "analytic"

    @property
    def is_flat_chart(self):
        return self.name == "euclidean"

    def _call(self, fn, x):
        x = np.asarray(x, dtype=float)
        if self._vectorized:
            return np.asarray(fn(x), dtype=float)
        flat = x.reshape(-1, self.dim)
        out = np.stack([np.asarray(fn(p), dtype=float) for p in flat])
        return out.reshape(x.shape[:-1] + out.shape[1:])

    def in_domain(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ok = np.all(np.isfinite(x), axis=-1)
        if self._domain is not None:
            ok &= np.asarray(self._domain(x), dtype=bool)
        return ok

    def metric_at(self, x, check=True):
        """Metric components at ``x``; raises :class:`MetricError` if not SPD."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValidationError(f"expected points with {self.dim} coordinates, got shape {x.shape}")
        g = self._call(self._metric, x)
        if check:
            _check_spd(g, x)
        return g

    def inverse_metric_at(self, x):
        return np.linalg.inv(self.metric_at(x))

    def inner(self, x, u, v, g=None):
        """g-inner product of vectors ``u`` and ``v`` based at ``x``."""
        if g is None:
            g = self.metric_at(x)
        return np.einsum("...i,...ij,...j->...", u, g, v)

    def norm(self, x, v, g=None):
        return np.sqrt(np.maximum(self.inner(x, v, v, g), 0.0))

    def christoffel_at(self, x):
        """Christoffel symbols ``Gamma[..., k, i, j]`` at ``x``.

        Uses the analytic source when one was supplied, otherwise central
        differences of the metric.
        """
        x = np.asarray(x, dtype=float)
        if self._christoffel is not None:
            return self._call(self._christoffel, x)
        return fd_christoffel(lambda p: self.metric_at(p), x, self.fd_step)


def _check_spd(g, x):
    gg = np.reshape(g, (-1,) + g.shape[-2:])
    asym = np.abs(gg - np.swapaxes(gg, -1, -2)).max(initial=0.0)
    scale = np.abs(gg).max(initial=1.0)
    if not np.all(np.isfinite(gg)) or asym > 1e-12 * max(scale, 1.0):
        raise MetricError("metric is not finite and symmetric")
    try:
        np.linalg.cholesky(gg)
    except np.linalg.LinAlgError:
        pts = np.reshape(x, (-1, x.shape[-1]))
        eig = np.linalg.eigvalsh(gg)
        bad = int(np.argmin(eig.min(axis=-1)))
        raise MetricError(
            f"metric not positive definite at x={pts[bad % len(pts)].tolist()} "
            f"(min eigenvalue {eig[bad].min():.3e})") from None


def fd_christoffel(metric, x, h=FD_STEP):
    """Christoffel symbols from central differences of ``metric``.

    ``Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)``.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    g = metric(x)
    dg = np.empty(x.shape[:-1] + (m, m, m))  # [.., l, i, j] = d_l g_ij
    for l in range(m):
        e = np.zeros(m)
        e[l] = h
        dg[..., l, :, :] = (metric(x + e) - metric(x - e)) / (2.0 * h)
    # first-kind symbols [.., l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    d_i_gjl = np.einsum("...ijl->...lij", dg)
    first = 0.5 * (d_i_gjl + np.swapaxes(d_i_gjl, -1, -2) - dg)
    return np.einsum("...kl,...lij->...kij", np.linalg.inv(g), first)


def contract(gamma, u, v):
    """``Gamma^k_ij u^i v^j`` for batched arrays."""
    return np.einsum("...kij,...i,...j->...k", gamma, u, v)


# -- built-in manifolds -------------------------------------------------------

def _conformal(dim, sign, name, domain):
    # g = e^{2 phi} I with e^{phi} = 2 / (1 + sign |x|^2)
    def metric(x):
        r2 = np.sum(x * x, axis=-1)
        lam = 4.0 / (1.0 + sign * r2) ** 2
        return lam[..., None, None] * np.eye(dim)

    def christoffel(x):
        r2 = np.sum(x * x, axis=-1)
        dphi = -2.0 * sign * x / (1.0 + sign * r2)[..., None]
        eye = np.eye(dim)
        # Gamma^k_ij = delta_ik d_j phi + delta_jk d_i phi - delta_ij d_k phi
        return (np.einsum("ki,...j->...kij", eye, dphi)
                + np.einsum("kj,...i->...kij", eye, dphi)
                - np.einsum("ij,...k->...kij", eye, dphi))

    return ChartManifold(dim, metric, christoffel, domain=domain, name=name)


def euclidean(dim):
    """Flat R^m in Cartesian coordinates."""
    dim = int(dim)

    def metric(x):
        return np.broadcast_to(np.eye(dim), np.shape(x)[:-1] + (dim, dim)).copy()

    def christoffel(x):
        return np.zeros(np.shape(x)[:-1] + (dim, dim, dim))

    return ChartManifold(dim, metric, christoffel, name="euclidean")


def sphere(dim):
    """Unit round sphere S^m in the stereographic chart from the north pole.

    The chart center corresponds to the south pole; the unit sphere
    ``|x| = 1`` of the chart is the equator.
    """
    return _conformal(int(dim), +1.0, "sphere",
                      lambda x: np.sum(x * x, axis=-1) < 1e12)


def hyperbolic(dim):
    """Hyperbolic space H^m in the Poincare ball model."""
    return _conformal(int(dim), -1.0, "hyperbolic",
                      lambda x: np.sum(x * x, axis=-1) < 1.0)


BUILTINS = {"euclidean": euclidean, "sphere": sphere, "hyperbolic": hyperbolic}


def from_spec(spec):
    """Build a manifold from ``{"kind": ..., "dim": m}``."""
    if isinstance(spec, ChartManifold):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError(f"bad manifold spec: {spec!r}")
    kind = spec["kind"]
    if kind == "custom":
        raise ValidationError("custom manifolds must be constructed programmatically")
    if kind not in BUILTINS:
        raise ValidationError(f"unknown manifold kind {kind!r}")
    try:
        dim = int(spec["dim"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"manifold spec needs an integer 'dim': {spec!r}") from None
    return BUILTINS[kind](dim)


# -- ODE machinery -------------------------------------------------------------

def rk4_linear(grid, a_nodes, a_mid, y0):
    """Fixed-step RK4 for ``y' = A(t) y`` on ``grid``.

    ``a_nodes`` holds ``A`` at the grid nodes, shape ``(K+1, m, m)``;
    ``a_mid`` at interval midpoints, shape ``(K, m, m)``. ``y0`` may be a
    vector ``(m,)`` or a matrix of column vectors ``(m, p)``.
    """
    y = np.array(y0, dtype=float)
    out = np.empty((len(grid),) + y.shape)
    out[0] = y
    h = np.diff(grid)
    for i in range(len(h)):
        hi = h[i]
        k1 = a_nodes[i] @ y
        k2 = a_mid[i] @ (y + 0.5 * hi * k1)
        k3 = a_mid[i] @ (y + 0.5 * hi * k2)
        k4 = a_nodes[i + 1] @ (y + hi * k3)
        y = y + hi / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return out


def _transport_generator(M, points, velocity):
    # A^k_j = -Gamma^k_ij gamma'^i
    return -np.einsum("nkij,ni->nkj", M.christoffel_at(points), velocity)


def covariant_derivative_along(M, curve, X):
    """``D_t X`` for a field ``X`` sampled on ``curve``'s grid.

    Components are ``(X^k)' + Gamma^k_ij (gamma^i)' X^j`` with ``X'`` taken
    from the curve module's spline differentiation.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != curve.points.shape:
        raise ValidationError(f"field shape {X.shape} does not match curve grid {curve.points.shape}")
    dX = curve.differentiate(X)
    return dX + contract(M.christoffel_at(curve.points), curve.velocity(), X)


def parallel_transport(M, curve, v0):
    """Parallel transport of ``v0`` (or the columns of a matrix) along ``curve``.

    Solves ``D_t X = 0`` with fixed-step RK4 on the curve grid; midpoint
    coefficients come from the curve spline.

    Returns an array shaped ``(K+1, m)`` for a vector input or
    ``(K+1, m, p)`` for a matrix input.
    """
    v0 = np.asarray(v0, dtype=float)
    if v0.shape[0] != M.dim:
        raise ValidationError(f"initial vector must have {M.dim} components")
    grid = curve.grid
    mid = 0.5 * (grid[1:] + grid[:-1])
    a_nodes = _transport_generator(M, curve.points, curve.velocity())
    a_mid = _transport_generator(M, curve(mid), curve(mid, 1))
    return rk4_linear(grid, a_nodes, a_mid, v0)


def geodesic_flow(M, x, v, time=1.0, steps=64, return_path=False):
    """Integrate the geodesic equation from ``(x, v)`` for ``time`` with RK4.

    Works on single points ``(m,)`` or batches ``(n, m)``. Returns the end
    point and end velocity (and the sampled path if ``return_path``).
    """
    x = np.array(x, dtype=float)
    v = np.array(v, dtype=float)
    h = float(time) / int(steps)

    def accel(p, w):
        return -contract(M.christoffel_at(p), w, w)

    path = [x.copy()] if return_path else None
    for _ in range(int(steps)):
        k1x, k1v = v, accel(x, v)
        x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
        k2x, k2v = v2, accel(x2, v2)
        x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
        k3x, k3v = v3, accel(x3, v3)
        x4, v4 = x + h * k3x, v + h * k3v
        k4x, k4v = v4, accel(x4, v4)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not np.all(M.in_domain(x)):
            raise ChartExitError("geodesic left the chart domain")
        if return_path:
            path.append(x.copy())
    if return_path:
        return x, v, np.array(path)
    return x, v


def exp_map(M, x, v, steps=32, max_radius=None):
    """Riemannian exponential ``exp_x(v)``: the geodesic endpoint at unit time."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if max_radius is not None:
        nv = M.norm(np.broadcast_to(x, v.shape), v)
        if np.any(nv > max_radius):
            raise ValidationError(f"tangent vector norm {float(np.max(nv)):.3g} exceeds shooting radius {max_radius}")
    if not np.any(v):
        return np.broadcast_to(x, np.broadcast_shapes(x.shape, v.shape)).copy()
    end, _ = geodesic_flow(M, np.broadcast_to(x, v.shape), v, 1.0, steps)
    return end
