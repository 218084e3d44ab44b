"""Sampled curves with spline differentiation and arclength reparametrization."""

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import make_interp_spline

from .exceptions import SingularSpeedError, ValidationError

SPEED_MIN = 1e-8
SEAM_TOL = 1e-8
DEFAULT_NODES = 2048
SPLINE_DEGREE = 5

_GL_X, _GL_W = leggauss(8)


def _is_periodic(values, tol=SEAM_TOL):
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    return float(np.abs(values[-1] - values[0]).max(initial=0.0)) <= tol * scale


class SampledCurve:
    """A curve in chart coordinates sampled on a strictly increasing grid.

    The points are interpolated by a spline of odd degree (quintic by
    default) with periodic end conditions when ``closed`` and not-a-knot
    conditions otherwise. For closed curves the last node repeats the
    first, so ``grid[-1]`` is the period.

    Parameters
    ----------
    grid : array_like, shape (K+1,)
    points : array_like, shape (K+1, m)
    closed : bool
    degree : int
        Spline degree; 3 gives the classical cubic interpolant.
    """

    def __init__(self, grid, points, closed=False, degree=SPLINE_DEGREE):
        grid = np.asarray(grid, dtype=float)
        points = np.array(points, dtype=float)
        if points.ndim != 2 or grid.ndim != 1 or len(grid) != len(points):
            raise ValidationError(f"grid {grid.shape} and points {points.shape} do not match")
        if len(grid) <= degree + 1:
            raise ValidationError(f"need more than {degree + 1} nodes, got {len(grid)}")
        if not np.all(np.diff(grid) > 0):
            raise ValidationError("curve grid must be strictly increasing")
        if closed:
            gap = np.abs(points[-1] - points[0]).max()
            if gap > SEAM_TOL:
                raise ValidationError(f"closed curve does not close: seam gap {gap:.3e}")
            points[-1] = points[0]
        self.grid = grid
        self.points = points
        self.closed = bool(closed)
        self.degree = int(degree)
        self._spline = self._fit(points, periodic=self.closed)

    def _fit(self, values, periodic):
        return make_interp_spline(self.grid, values, k=self.degree,
                                  bc_type="periodic" if periodic else None)

    @classmethod
    def from_points(cls, points, closed=False, grid=None, degree=SPLINE_DEGREE):
        """Build a curve from raw samples.

        For closed curves the seam node is appended if the last point does
        not already repeat the first. The default parameter is uniform on
        ``[0, 1]``.
        """
        points = np.asarray(points, dtype=float)
        if closed and np.abs(points[-1] - points[0]).max() > SEAM_TOL:
            points = np.vstack([points, points[:1]])
            if grid is not None:
                raise ValidationError("supply the seam node explicitly when passing a grid for a closed curve")
        if grid is None:
            grid = np.linspace(0.0, 1.0, len(points))
        return cls(grid, points, closed, degree)

    @classmethod
    def from_function(cls, f, a, b, n=DEFAULT_NODES, closed=False, degree=SPLINE_DEGREE):
        """Sample ``f`` at ``n + 1`` equally spaced parameters in ``[a, b]``."""
        t = np.linspace(a, b, n + 1)
        pts = np.asarray(f(t), dtype=float)
        if closed:
            pts[-1] = pts[0]
        return cls(t, pts, closed, degree)

    def __call__(self, t, nu=0):
        t = np.asarray(t, dtype=float)
        if self.closed:
            t = self.grid[0] + np.mod(t - self.grid[0], self.length)
        return self._spline(t, nu)

    def __len__(self):
        return len(self.grid)

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_intervals(self):
        return len(self.grid) - 1

    @property
    def length(self):
        """Parameter length ``grid[-1] - grid[0]`` (arclength once reparametrized)."""
        return float(self.grid[-1] - self.grid[0])

    def velocity(self):
        return self._spline(self.grid, 1)

    def acceleration_param(self):
        return self._spline(self.grid, 2)

    def differentiate(self, values, nu=1):
        """Spline derivative of a field sampled on this curve's grid.

        Periodic end conditions are used when the curve is closed and the
        field itself closes up at the seam.
        """
        values = np.array(values, dtype=float)
        if len(values) != len(self.grid):
            raise ValidationError(f"field has {len(values)} samples, grid has {len(self.grid)}")
        periodic = self.closed and _is_periodic(values)
        if periodic:
            values[-1] = values[0]
        return self._fit(values, periodic)(self.grid, nu)

    def interpolate(self, values, t, nu=0):
        """Evaluate the spline through ``values`` (sampled on the grid) at ``t``."""
        values = np.array(values, dtype=float)
        periodic = self.closed and _is_periodic(values)
        if periodic:
            values[-1] = values[0]
        return self._fit(values, periodic)(t, nu)

    def antiderivative(self, values):
        """Cumulative integral ``int_{t_0}^{t} f`` at the grid nodes."""
        spl = self._fit(np.asarray(values, dtype=float), periodic=False)
        return spl.antiderivative()(self.grid) - spl.antiderivative()(self.grid[0])

    def reversed(self):
        """Same curve traversed backwards, on the mirrored grid."""
        grid = self.grid[-1] - self.grid[::-1]
        return type(self)(grid, self.points[::-1], self.closed, self.degree)

    def resampled(self, n):
        """Evaluate the spline on ``n + 1`` equally spaced parameters."""
        t = np.linspace(self.grid[0], self.grid[-1], n + 1)
        pts = self._spline(t)
        return type(self)(t, pts, self.closed, self.degree)


def _speed(M, curve, u):
    x = curve(u)
    v = curve(u, 1)
    return M.norm(x, v)


def _segment_lengths(M, curve, a, b):
    """Gauss-Legendre lengths of the parameter segments ``[a_i, b_i]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    u = mid[:, None] + half[:, None] * _GL_X[None, :]
    sp = _speed(M, curve, u.ravel()).reshape(u.shape)
    return half * (sp @ _GL_W), sp


def curve_length(M, curve):
    """g-length of ``curve`` by 8-point Gauss-Legendre on each grid interval."""
    seg, _ = _segment_lengths(M, curve, curve.grid[:-1], curve.grid[1:])
    return float(seg.sum())


def reparametrize_by_arclength(M, curve, n=None, newton_iters=8, return_parameters=False):
    """Resample ``curve`` at equal g-arclength steps.

    Parameters
    ----------
    M : ChartManifold
    curve : SampledCurve
    n : int, optional
        Number of intervals of the output grid; defaults to the input's.

    return_parameters : bool
        Also return the input parameters of the new nodes.

    Returns
    -------
    SampledCurve
        Unit-speed curve on ``[0, length]``.
    """
    n = curve.n_intervals if n is None else int(n)
    node_speed = M.norm(curve.points, curve.velocity())
    seg, gl_speed = _segment_lengths(M, curve, curve.grid[:-1], curve.grid[1:])
    low = min(float(node_speed.min()), float(gl_speed.min()))
    if low < SPEED_MIN:
        bad = curve.grid[int(np.argmin(node_speed))]
        raise SingularSpeedError(f"curve speed {low:.3e} below {SPEED_MIN:g} near parameter {bad:.6g}")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])
    s = np.linspace(0.0, total, n + 1)

    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    u0 = curve.grid[idx]
    u1 = curve.grid[idx + 1]
    u = u0 + (s - cum[idx]) / np.maximum(seg[idx], 1e-300) * (u1 - u0)
    for _ in range(newton_iters):
        partial, _ = _segment_lengths(M, curve, u0, u)
        f = cum[idx] + partial - s
        u = np.clip(u - f / _speed(M, curve, u), u0, u1)
    u[0], u[-1] = curve.grid[0], curve.grid[-1]

    pts = curve(u)
    if curve.closed:
        pts[-1] = pts[0]
    out = SampledCurve(s, pts, curve.closed, curve.degree)
    return (out, u) if return_parameters else out
