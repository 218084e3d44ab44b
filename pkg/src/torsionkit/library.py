"""Ready-made test curves with known geometry."""

from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .curve import DEFAULT_NODES, SampledCurve, reparametrize_by_arclength
from .frames import frenet_data
from .manifold import euclidean, sphere


def helix(a=1.0, b=0.5, turns=1.0, n=DEFAULT_NODES):
    """Unit-speed circular helix ``(a cos s/c, a sin s/c, b s/c)``, ``c = sqrt(a^2+b^2)``.

    Curvature ``a/c^2`` and torsion ``b/c^2`` are constant.
    """
    c = np.hypot(a, b)
    L = 2.0 * np.pi * c * turns
    s = np.linspace(0.0, L, n + 1)
    pts = np.c_[a * np.cos(s / c), a * np.sin(s / c), b * s / c]
    return SampledCurve(s, pts)


def circle(radius=1.0, n=DEFAULT_NODES, dim=3):
    s = np.linspace(0.0, 2.0 * np.pi * radius, n + 1)
    pts = np.zeros((n + 1, dim))
    pts[:, 0] = radius * np.cos(s / radius)
    pts[:, 1] = radius * np.sin(s / radius)
    return SampledCurve(s, pts, closed=True)


def ellipse(a=2.0, b=1.0, n=DEFAULT_NODES):
    """Planar ellipse in the ``z = 0`` plane of flat 3-space, unit speed."""
    f = lambda t: np.c_[a * np.cos(t), b * np.sin(t), np.zeros_like(t)]
    raw = SampledCurve.from_function(f, 0.0, 2.0 * np.pi, n, closed=True)
    return reparametrize_by_arclength(euclidean(3), raw)


def line(n=256, length=1.0):
    s = np.linspace(0.0, length, n + 1)
    return SampledCurve(s, np.c_[s, 0.5 * s, np.zeros_like(s)] / np.sqrt(1.25))


def wavy_spherical(amplitudes, phases, base=np.pi / 3, n=DEFAULT_NODES):
    """Closed curve on the unit sphere with oscillating latitude.

    Polar angle ``base + sum_k A_k sin(k phi + p_k)``, k = 1, 2, ..., as the longitude
    ``phi`` runs once around. Returned in the ambient flat 3-space.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    k = np.arange(1, len(amplitudes) + 1)

    def f(phi):
        th = base + np.sin(np.outer(phi, k) + phases) @ amplitudes
        return np.c_[np.sin(th) * np.cos(phi), np.sin(th) * np.sin(phi), np.cos(th)]

    raw = SampledCurve.from_function(f, 0.0, 2.0 * np.pi, n, closed=True)
    return reparametrize_by_arclength(euclidean(3), raw)


def random_wavy_spherical(rng, n=DEFAULT_NODES, modes=3):
    """Random instance of :func:`wavy_spherical` with curvature kept positive."""
    amps = rng.uniform(0.02, 0.12, modes) / np.arange(1, modes + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, modes)
    base = rng.uniform(0.35, 1.2) * np.pi / 2
    return wavy_spherical(amps, phases, base, n)


def latitude_in_chart(alpha, n=DEFAULT_NODES):
    """Latitude circle at polar angle ``alpha`` on ``S^2`` in the stereographic chart.

    Returns ``(M, curve)``; the image is a circle of radius
    ``sin(alpha) / (1 + cos(alpha))`` about the origin.
    """
    M = sphere(2)
    rho = np.sin(alpha) / (1.0 + np.cos(alpha))
    f = lambda t: rho * np.c_[np.cos(t), np.sin(t)]
    raw = SampledCurve.from_function(f, 0.0, 2.0 * np.pi, n, closed=True)
    return M, reparametrize_by_arclength(M, raw)


def coil(r, n=DEFAULT_NODES):
    """Closed curve winding twice around a unit circle.

    ``((1 + r cos 2s) cos s, (1 + r cos 2s) sin s, -r sin 2s)``. Its total
    torsion decreases monotonically in ``r`` on ``[0.8, 10]``, from about
    ``6.6`` to ``0.6``, with curvature bounded away from zero.
    """
    def f(s):
        rad = 1.0 + r * np.cos(2 * s)
        return np.c_[rad * np.cos(s), rad * np.sin(s), -r * np.sin(2 * s)]

    raw = SampledCurve.from_function(f, 0.0, 2.0 * np.pi, n, closed=True)
    return reparametrize_by_arclength(euclidean(3), raw)


def _coil_total(r, n):
    c = coil(r, n)
    W = frenet_data(euclidean(3), c)[3]
    return float(simpson(W.scalar, x=c.grid))


@lru_cache(maxsize=8)
def coil_radius_for_total(target, n=1024, xtol=1e-13):
    """Coil parameter ``r`` whose total torsion equals ``target``."""
    return brentq(lambda r: _coil_total(r, n) - target, 0.8, 10.0, xtol=xtol)


def prescribed_total_torsion(target, n=DEFAULT_NODES):
    """Closed coil with total torsion ``target`` (in ``(0.6, 6.5)``)."""
    return coil(coil_radius_for_total(float(target)), n)
