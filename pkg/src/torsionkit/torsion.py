"""Total torsion, quantization verdicts and the end-to-end verification suite."""

import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import library
from .curve import DEFAULT_NODES, SampledCurve, curve_length, reparametrize_by_arclength
from .exceptions import ConvexContradiction, SeamMismatch, TorsionKitError, ValidationError
from .frames import (NormalField, _inner, _norm, darboux_data, detect_direction_field,
                     frenet_data, parallel_frame_in_H, principal_normal, rotate_normal,
                     rotated_darboux_via_lemma)
from .manifold import euclidean, parallel_transport, sphere
from .surface import (QUANT_TOL, construct_ribbon, ellipsoid, is_convex_along,
                      is_line_of_curvature, torus, trace_line_of_curvature)

INCONCLUSIVE_RESIDUAL = np.pi / 10
TWO_PI = 2.0 * np.pi


def integrate(values, grid):
    """Composite Simpson quadrature on the curve grid."""
    return float(simpson(np.asarray(values, dtype=float), x=grid))


@dataclass(frozen=True)
class TorsionTotal:
    """Quadrature of a torsion function along one lap of a curve.

    ``seam_flip`` marks closed curves whose direction field returns with
    the opposite sign; the lap total is still reported but over the
    orientable double cover the integral cancels to zero.
    """

    total: float
    seam_flip: bool

    def __float__(self):
        return self.total


def total_torsion(M, curve, eps=None):
    """``int tau dt`` for ``tau = <T_g(P), W(P)>``.

    Raises
    ------
    FrenetViolation, NotTorsionDefining
    """
    kwargs = {} if eps is None else {"eps": eps}
    W = frenet_data(M, curve, **kwargs)[3]
    return integrate(W.scalar, curve.grid)


def total_torsion_report(M, curve):
    W = frenet_data(M, curve)[3]
    return TorsionTotal(integrate(W.scalar, curve.grid), W.seam_flip)


def geodesic_torsion(M, curve, N):
    """Scalar geodesic torsion ``<T_g, W(N)>`` and its direction field."""
    frame = parallel_frame_in_H(M, curve, N)
    data = darboux_data(M, curve, frame)
    W = detect_direction_field(M, data, "torsion", reference="frame" if M.dim == 3 else None)
    return W.scalar, W, data


def total_geodesic_torsion(M, curve, N):
    """``int tau_g dt`` relative to the normal field ``N``."""
    tau, _, _ = geodesic_torsion(M, curve, N)
    return integrate(tau, curve.grid)


@dataclass(frozen=True)
class ConvexContext:
    """Evidence that the ambient surface is convex along the curve.

    ``cos_theta`` is ``kappa_n / kappa``, the cosine of the angle between
    the principal normal and the surface normal.
    """

    convex: bool
    cos_theta: np.ndarray


def convex_context(M, curve, S):
    shape = S.shape_along(curve)
    pd = frenet_data(M, curve)[0]
    kn = shape.second_fundamental_form[:, 0, 0]
    return ConvexContext(is_convex_along(S, curve), kn / pd.kappa)


@dataclass(frozen=True)
class QuantizationReport:
    total: float
    nearest_n: int
    residual: float
    verdict: str
    tolerance_used: float
    convex_prediction_checked: bool = False

    def to_dict(self):
        return asdict(self)


def quantization_report(total, tol=QUANT_TOL, convex_context=None, frame_residual=0.0):
    """Distance of ``total`` from ``2 pi Z`` and the resulting verdict.

    The tolerance widens to ``10 * frame_residual`` when that is larger;
    frame residuals beyond ``pi / 10`` give ``"inconclusive"``.

    With a convex context the nearest integer must be 0 and
    ``cos(theta) = kappa_n / kappa`` must stay positive, which pins the
    rotation angle inside ``(-pi/2, pi/2)``.

    Raises
    ------
    ConvexContradiction
    """
    if not tol > 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    total = float(total)
    n = int(np.round(total / TWO_PI))
    residual = abs(total - TWO_PI * n)
    used = max(float(tol), 10.0 * float(frame_residual))
    if frame_residual > INCONCLUSIVE_RESIDUAL:
        verdict = "inconclusive"
    else:
        verdict = "quantized" if residual <= used else "not-quantized"
    checked = False
    if convex_context is not None and convex_context.convex:
        cmin = float(np.min(convex_context.cos_theta))
        if n != 0:
            raise ConvexContradiction(f"convex surface but total torsion is 2*pi*{n}")
        if cmin <= 0:
            raise ConvexContradiction(f"convex surface but cos(theta) reaches {cmin:.3e}")
        checked = True
    return QuantizationReport(total, n, residual, verdict, used, checked)


# -- scenario suite --------------------------------------------------------------

ELLIPSOID_AXES = (2.0, 1.5, 1.0)
ELLIPSOID_START = (1.1, 0.5)
TORUS_RADII = (2.0, 0.5)
TORUS_START = (0.7, 0.3)


def seed_from_env(default=0):
    raw = os.environ.get("TORSIONKIT_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"TORSIONKIT_SEED must be an integer, got {raw!r}") from None


def _result(name, passed, total=None, n=None, residual=None, notes=""):
    return {"name": name, "pass": bool(passed),
            "total": None if total is None else float(total),
            "n": None if n is None else int(n),
            "residual": None if residual is None else float(residual),
            "notes": notes}


def _frame_residual(data):
    return max(data.residuals.values())


def scenario_spherical(cfg):
    M = euclidean(3)
    rng = np.random.default_rng(cfg["seed"])
    worst, worst_total, verdicts = 0.0, 0.0, []
    for _ in range(cfg.get("spherical_count", 10)):
        c = library.random_wavy_spherical(rng, n=cfg["resolution"])
        pd, frame, data, W = frenet_data(M, c)
        total = integrate(W.scalar, c.grid)
        rep = quantization_report(total, cfg["tol"], frame_residual=_frame_residual(data))
        verdicts.append(rep.verdict)
        if abs(total) >= worst:
            worst, worst_total = abs(total), total
    ok = worst <= 1e-4 and all(v == "quantized" for v in verdicts)
    return _result("spherical", ok, worst_total, 0, worst,
                   f"{len(verdicts)} random closed spherical curves; residual is max |total|")


def _loc_scenario(name, S, start, convex, cfg):
    M = S.M
    x0 = S.param(np.atleast_2d(start))[0]
    worst, totals, notes = 0.0, [], []
    ok = True
    for family in (0, 1):
        c = trace_line_of_curvature(S, x0, family=family, n_steps=cfg["resolution"])
        loc = is_line_of_curvature(M, c, S, tol=1e-4)
        pd, frame, data, W = frenet_data(M, c)
        total = integrate(W.scalar, c.grid)
        ctx = convex_context(M, c, S) if convex else None
        rep = quantization_report(total, cfg["tol"], ctx, _frame_residual(data))
        totals.append(total)
        worst = max(worst, rep.residual)
        ok &= rep.verdict == "quantized" and bool(loc.verdict)
        if convex:
            ok &= rep.nearest_n == 0 and rep.convex_prediction_checked
        notes.append(f"family {family}: n={rep.nearest_n}, loc residual {loc.residual:.2e}")
    n = int(np.round(totals[int(np.argmax(np.abs(totals)))] / TWO_PI))
    return _result(name, ok, max(totals, key=abs), n, worst, "; ".join(notes))


def scenario_ellipsoid(cfg):
    S = ellipsoid(euclidean(3), ELLIPSOID_AXES).flipped()
    return _loc_scenario("ellipsoid-loc", S, ELLIPSOID_START, True, cfg)


def scenario_torus(cfg):
    S = torus(euclidean(3), *TORUS_RADII)
    return _loc_scenario("torus-loc", S, TORUS_START, False, cfg)


def scenario_ribbon_n1(cfg):
    M = euclidean(3)
    c = library.prescribed_total_torsion(TWO_PI, n=cfg["resolution"])
    P = frenet_data(M, c)[0].P
    R = construct_ribbon(M, c, P)
    v = R.verification
    ok = (R.seam["lattice_distance"] <= 1e-5 and R.nearest_n == 1
          and v["line_of_curvature_residual"] <= 1e-4)
    return _result("ribbon-converse-n1", ok, R.total, R.nearest_n,
                   v["line_of_curvature_residual"],
                   f"seam gap {R.seam['lattice_distance']:.2e}")


def scenario_ribbon_pi(cfg):
    M = euclidean(3)
    c = library.prescribed_total_torsion(np.pi, n=cfg["resolution"])
    P = frenet_data(M, c)[0].P
    try:
        construct_ribbon(M, c, P, verify=False)
    except SeamMismatch as exc:
        return _result("ribbon-refuse-pi", True, exc.total, exc.nearest_n,
                       abs(exc.total - TWO_PI * exc.nearest_n), "refused with SeamMismatch")
    return _result("ribbon-refuse-pi", False, notes="ribbon was built for a total of pi")


def scenario_helix_ribbon(cfg):
    M = euclidean(3)
    c = library.helix(1.0, 0.5, n=cfg["resolution"])
    R = construct_ribbon(M, c, frenet_data(M, c)[0].P)
    res = R.verification["line_of_curvature_residual"]
    return _result("helix-ribbon", res <= 1e-4, R.total, None, res, "open helix, N = P")


def random_smooth_angle(rng, grid, modes=3, amplitude=1.0):
    """Random trigonometric angle function on ``grid``."""
    L = grid[-1] - grid[0]
    u = (grid - grid[0]) / L
    theta = np.full_like(grid, rng.uniform(-np.pi, np.pi))
    for k in range(1, modes + 1):
        a, b = rng.normal(0.0, amplitude / k, 2)
        theta += a * np.cos(2 * np.pi * k * u) + b * np.sin(2 * np.pi * k * u)
    theta += rng.normal(0.0, amplitude) * u
    return theta


def _chart_curve_4d(n):
    M = sphere(4)
    f = lambda t: 0.5 * np.c_[np.cos(t), np.sin(t), 0.3 * np.cos(2 * t), 0.2 * np.sin(3 * t)]
    raw = SampledCurve.from_function(f, 0.0, 2.0 * np.pi, n, closed=True)
    return M, reparametrize_by_arclength(M, raw)


def lemma_test_curves(n, count=5):
    """Frenet test curves for the rotation-law checks.

    The first three live in flat 3-space; the fourth is planar and the
    fifth sits in the stereographic chart of the 4-sphere, where the
    complement distribution has rank two.
    """
    M = euclidean(3)
    curves = [("helix", M, library.helix(1.0, 0.5, n=n)),
              ("coil", M, library.coil(1.2, n=n)),
              ("spherical", M, library.wavy_spherical([0.1, 0.03], [0.3, 1.1], n=n)),
              ("ellipse", M, library.ellipse(n=n))]
    curves.append(("s4-chart",) + _chart_curve_4d(n))
    return curves[:count]


def lemma_discrepancy(M, curve, N, theta):
    """Sup-norm gap between lemma-transformed and directly recomputed data."""
    frame = parallel_frame_in_H(M, curve, N)
    data = darboux_data(M, curve, frame)
    lem = rotated_darboux_via_lemma(data, theta)
    Nt, ft = rotate_normal(frame, theta)
    direct = darboux_data(M, curve, ft)
    return max(float(np.abs(lem.kg - direct.kg).max()),
               float(np.abs(lem.kn - direct.kn).max()),
               float(np.abs(lem.tg - direct.tg).max()))


def scenario_rotation_lemma(cfg):
    rng = np.random.default_rng(cfg["seed"] + 1)
    worst = 0.0
    count = cfg.get("lemma_angles", 20)
    curves = lemma_test_curves(cfg["resolution"])
    for name, M, c in curves:
        P = principal_normal(M, c).P
        for _ in range(count):
            worst = max(worst, lemma_discrepancy(M, c, P, random_smooth_angle(rng, c.grid)))
    return _result("rotation-lemma", worst <= 1e-6, None, None, worst,
                   f"{len(curves)} curves x {count} angles; sup-norm gap")


def identity_gap(M, curve, N, theta):
    """``|int tau_g(theta) - int tau_g - (theta(l) - theta(0))|`` by direct recomputation."""
    frame = parallel_frame_in_H(M, curve, N)
    Nt, _ = rotate_normal(frame, theta)
    base = total_geodesic_torsion(M, curve, N)
    rot = total_geodesic_torsion(M, curve, Nt)
    return abs(rot - base - (theta[-1] - theta[0]))


def scenario_rotation_identity(cfg):
    rng = np.random.default_rng(cfg["seed"] + 2)
    worst = 0.0
    count = cfg.get("identity_rotations", 10)
    for name, M, c in lemma_test_curves(cfg["resolution"], 3):
        P = principal_normal(M, c).P
        for _ in range(count):
            theta = random_smooth_angle(rng, c.grid, amplitude=0.5)
            worst = max(worst, identity_gap(M, c, P, theta))
    return _result("rotation-identity", worst <= 1e-5, None, None, worst,
                   f"3 curves x {count} parallel rotations")


def holonomy_angle(alpha, n=DEFAULT_NODES):
    """Holonomy of the latitude at polar angle ``alpha`` on the unit sphere.

    Transports a vector once around the loop and measures, continuously,
    its angle against the unit tangent. The tangent itself turns by the
    total geodesic curvature, so the holonomy is ``2 pi`` minus the angle
    lost by the transported vector. Returns ``(holonomy, norm drift)``.
    """
    M, c = library.latitude_in_chart(alpha, n)
    V = parallel_transport(M, c, c.velocity()[0])
    g = M.metric_at(c.points)
    E = c.velocity()
    gE = np.einsum("nij,nj->ni", g, E)
    J = np.c_[-gE[:, 1], gE[:, 0]] / np.sqrt(np.linalg.det(g))[:, None]
    phi = np.unwrap(np.arctan2(_inner(V, g, J), _inner(V, g, E)))
    return float(TWO_PI + phi[-1] - phi[0]), float(np.abs(_norm(V, g) - 1.0).max())


def scenario_holonomy(cfg):
    worst = 0.0
    for alpha in (np.pi / 6, np.pi / 4, np.pi / 3):
        ang, _ = holonomy_angle(alpha, cfg["resolution"])
        worst = max(worst, abs(ang - TWO_PI * (1.0 - np.cos(alpha))))
    return _result("holonomy", worst <= 1e-5, None, None, worst,
                   "latitudes at pi/6, pi/4, pi/3; residual is max angle error")


def _transport_curve(T, n):
    s = np.linspace(0.0, T, n + 1)
    return SampledCurve(s, np.c_[0.6 * np.cos(s), 0.6 * np.sin(s), 0.25 * np.sin(2.5 * s)])


def transport_drift(n=DEFAULT_NODES, length=20.0, seed=0):
    """Gram-matrix drift of a transported orthonormal frame in the 3-sphere chart.

    The curve is a wobbly loop cut to g-length ``length``. Returns
    ``(max |G - I|, length)``.
    """
    M = sphere(3)
    T = brentq(lambda T: curve_length(M, _transport_curve(T, 256)) - length, 0.5, 50.0)
    c = _transport_curve(T, n)
    g0 = M.metric_at(c.points[0])
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    basis = np.linalg.solve(np.linalg.cholesky(g0).T, Q).T
    V = parallel_transport(M, c, basis)
    g = M.metric_at(c.points)
    G = np.einsum("nai,nij,nbj->nab", V, g, V)
    return float(np.abs(G - np.eye(3)).max()), curve_length(M, c)


def scenario_transport(cfg):
    drift, length = transport_drift(cfg["resolution"], seed=cfg["seed"])
    return _result("transport-isometry", drift <= 1e-9, None, None, drift,
                   f"3-sphere chart, curve length {length:.6g}")


def scenario_helix_classical(cfg):
    M = euclidean(3)
    a, b = 1.0, 0.5
    c = library.helix(a, b, n=cfg["resolution"])
    pd, frame, data, W = frenet_data(M, c)
    k_err = float(np.abs(pd.kappa - a / (a * a + b * b)).max())
    t_err = float(np.abs(W.scalar - b / (a * a + b * b)).max())
    total = integrate(W.scalar, c.grid)
    return _result("helix-classical", max(k_err, t_err) <= 1e-6, total, None,
                   max(k_err, t_err), f"kappa err {k_err:.2e}, tau err {t_err:.2e}")


SCENARIOS = {
    "spherical": scenario_spherical,
    "ellipsoid-loc": scenario_ellipsoid,
    "torus-loc": scenario_torus,
    "ribbon-converse-n1": scenario_ribbon_n1,
    "ribbon-refuse-pi": scenario_ribbon_pi,
    "helix-ribbon": scenario_helix_ribbon,
    "rotation-lemma": scenario_rotation_lemma,
    "rotation-identity": scenario_rotation_identity,
    "holonomy": scenario_holonomy,
    "transport-isometry": scenario_transport,
    "helix-classical": scenario_helix_classical,
}
SUITES = {"core": list(SCENARIOS)}


def resolve_suite(suite):
    """Scenario names for a suite name, a comma list, or a list."""
    if isinstance(suite, str):
        names = SUITES.get(suite, [s for s in suite.split(",") if s.strip()])
    else:
        names = list(suite)
    names = [s.strip() for s in names]
    unknown = [s for s in names if s not in SCENARIOS]
    if unknown:
        raise ValidationError(f"unknown scenarios: {', '.join(unknown)}")
    if not names:
        raise ValidationError("scenario suite is empty")
    return names


def verify_theorem_suite(config=None):
    """Run the selected scenarios and collect a report bundle.

    ``config`` keys: ``suite`` (name, comma list or list; default
    ``"core"``), ``resolution`` (default 2048), ``tol`` (default 1e-3),
    ``seed`` (default from ``TORSIONKIT_SEED`` or 0). Scenario failures
    and exceptions are recorded, never raised.
    """
    cfg = {"suite": "core", "resolution": DEFAULT_NODES, "tol": QUANT_TOL, "seed": None}
    cfg.update(config or {})
    if cfg["seed"] is None:
        cfg["seed"] = seed_from_env()
    if int(cfg["resolution"]) < 64:
        raise ValidationError("resolution must be at least 64")
    names = resolve_suite(cfg["suite"])
    out = []
    for name in names:
        try:
            res = SCENARIOS[name](cfg)
        except TorsionKitError as exc:
            res = _result(name, False, notes=f"{type(exc).__name__}: {exc}")
        out.append(res)
    echo = {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
            for k, v in cfg.items()}
    echo["scenarios"] = names
    return {"scenarios": out, "config_echo": echo}
