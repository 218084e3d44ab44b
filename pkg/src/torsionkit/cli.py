"""Command-line front end.

Exit codes: 0 success, 1 failed verification scenario, 2 invalid input,
3 numerical failure, 4 ribbon seam mismatch.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io, library
from .curve import DEFAULT_NODES
from .exceptions import (ConvexContradiction, NumericalError, SeamMismatch, TorsionKitError,
                         ValidationError)
from .frames import (NormalField, darboux_data, is_three_dimensional, parallel_frame_in_H,
                     principal_normal)
from .manifold import parallel_transport
from .surface import (QUANT_TOL, construct_ribbon, from_spec as surface_from_spec,
                      is_convex_along, is_line_of_curvature, is_well_positioned)
from .torsion import (convex_context, quantization_report, total_geodesic_torsion,
                      total_torsion_report, verify_theorem_suite)

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERICAL, EXIT_SEAM = 0, 1, 2, 3, 4
FORMATS = ("json", "csv", "svg")
MIN_RESOLUTION = 64


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    manifold: dict = None
    surface: dict = None
    resolution: int = DEFAULT_NODES
    tol: float = QUANT_TOL
    out: str = "."
    formats: tuple = ("json", "csv")
    normal: str = "principal"
    suite: str = "core"
    vector: list = None

    def validate(self):
        if self.resolution < MIN_RESOLUTION:
            raise ValidationError(f"--resolution must be at least {MIN_RESOLUTION}")
        if not self.tol > 0:
            raise ValidationError("--tol must be positive")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValidationError(f"unknown output format(s): {', '.join(bad)}")
        try:
            os.makedirs(self.out, exist_ok=True)
        except OSError as exc:
            raise ValidationError(f"cannot create output directory {self.out}: {exc.strerror}") from None
        if not os.access(self.out, os.W_OK):
            raise ValidationError(f"output directory {self.out} is not writable")
        return self

    def echo(self):
        return {"command": self.command, "inputs": list(self.inputs),
                "manifold": self.manifold, "surface": self.surface,
                "resolution": self.resolution, "tol": self.tol,
                "formats": list(self.formats), "normal": self.normal,
                "suite": self.suite, "vector": self.vector}


def _json_arg(text, what):
    """A JSON object given inline or as a path to a file."""
    if text is None:
        return None
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        raise ValidationError(f"--{what} is neither a file nor valid JSON: {text!r}") from None
    if not isinstance(value, dict):
        raise ValidationError(f"--{what} must be a JSON object")
    return value


def _single_input(cfg):
    if len(cfg.inputs) != 1:
        raise ValidationError(f"{cfg.command} needs exactly one --input")
    return cfg.inputs[0]


def _out(cfg, name):
    return os.path.join(cfg.out, name)


def _normal_field(cfg, M, curve, raw, u):
    if cfg.normal == "principal":
        return principal_normal(M, curve).P
    vals = io.load_normal(cfg.normal, raw, u)
    g = M.metric_at(curve.points)
    E = curve.velocity()
    vals = vals - np.einsum("ni,nij,nj->n", vals, g, E)[:, None] * E
    norms = np.sqrt(np.einsum("ni,nij,nj->n", vals, g, vals))
    if norms.min() < 1e-8:
        raise ValidationError("supplied normal field is tangent to the curve somewhere")
    return NormalField(vals / norms[:, None])


# -- commands ----------------------------------------------------------------------

def analyze(cfg):
    M, curve, raw, u = io.load_curve(_single_input(cfg), cfg.resolution, cfg.manifold)
    S = surface_from_spec(M, cfg.surface) if cfg.surface else None
    if S is not None and cfg.normal == "principal":
        N = S.normal_along(curve)
        normal_name = "surface"
    else:
        N = _normal_field(cfg, M, curve, raw, u)
        normal_name = cfg.normal
    frame = parallel_frame_in_H(M, curve, N)
    data = darboux_data(M, curve, frame)
    report = is_three_dimensional(M, curve, tol=1e-5)
    tot = total_torsion_report(M, curve)
    summary = {
        "length": curve.length,
        "closed": curve.closed,
        "nodes": len(curve.grid),
        "normal": normal_name,
        "total_torsion": tot.total,
        "seam_flip": tot.seam_flip,
        "three_dimensional": {"verdict": report.verdict, "residuals": report.residuals},
        "darboux_residuals": data.residuals,
        "curvature_range": [float(report.kappa.min()), float(report.kappa.max())],
        "config": cfg.echo(),
    }
    frame_res = max(data.residuals.values())
    if curve.closed:
        summary["quantization"] = quantization_report(tot.total, cfg.tol,
                                                      frame_residual=frame_res).to_dict()
    if S is not None:
        loc = is_line_of_curvature(M, curve, S)
        wp, wp_res = is_well_positioned(M, curve, S)
        convex = is_convex_along(S, curve)
        block = {"line_of_curvature": bool(loc.verdict),
                 "line_of_curvature_residual": loc.residual,
                 "eigen_residual": loc.eigen_residual,
                 "well_positioned": wp, "well_positioned_residual": wp_res,
                 "convex": convex,
                 "total_geodesic_torsion": total_geodesic_torsion(M, curve, N)}
        if curve.closed:
            ctx = convex_context(M, curve, S) if convex else None
            block["quantization"] = quantization_report(tot.total, cfg.tol, ctx,
                                                        frame_res).to_dict()
        summary["surface"] = block

    r = frame.rank
    header = (["t", "kappa", "kn"] + [f"kg_{j + 1}" for j in range(r)]
              + [f"tg_{j + 1}" for j in range(r)])
    if "csv" in cfg.formats:
        io.write_csv(_out(cfg, "darboux.csv"), header,
                     [curve.grid, report.kappa, data.kn, data.kg, data.tg])
    if "json" in cfg.formats:
        io.write_json(_out(cfg, "summary.json"), summary)
    if "svg" in cfg.formats:
        io.atomic_write(_out(cfg, "profile.svg"),
                        io.svg_polyline(curve.grid, report.tau, "torsion profile", "t", "tau"))
    print(f"length {curve.length:.12g}  total torsion {tot.total:.12g}  "
          f"three-dimensional {report.verdict}")
    return EXIT_OK


def verify(cfg):
    bundle = verify_theorem_suite({"suite": cfg.suite, "resolution": cfg.resolution,
                                   "tol": cfg.tol})
    io.write_json(_out(cfg, "report.json"), bundle)
    failed = [s for s in bundle["scenarios"] if not s["pass"]]
    for s in bundle["scenarios"]:
        res = "-" if s["residual"] is None else f"{s['residual']:.3e}"
        print(f"{'PASS' if s['pass'] else 'FAIL'}  {s['name']:<20} residual {res}  {s['notes']}")
    return EXIT_FAILED if failed else EXIT_OK


def construct(cfg):
    M, curve, raw, u = io.load_curve(_single_input(cfg), cfg.resolution, cfg.manifold)
    N = _normal_field(cfg, M, curve, raw, u)
    ribbon = construct_ribbon(M, curve, N, closed_tol=cfg.tol)
    r = M.dim - 2
    header = {
        "curve_hash": io.curve_hash(curve),
        "length": curve.length,
        "closed": curve.closed,
        "u_values": ribbon.u_values,
        "lattice_shape": list(ribbon.lattice.shape),
        "total_geodesic_torsion": ribbon.total,
        "theta_winding": (ribbon.theta[-1] - ribbon.theta[0]) / (2 * np.pi),
        "nearest_n": ribbon.nearest_n,
        "seam": ribbon.seam,
        "verification": ribbon.verification,
        "config": cfg.echo(),
    }
    if "json" in cfg.formats:
        io.write_json(_out(cfg, "ribbon.json"), header)
    if "csv" in cfg.formats:
        nt = len(curve.grid)
        grids = np.meshgrid(*([ribbon.u_values] * r), indexing="ij")
        uu = np.stack([g.ravel() for g in grids], axis=-1)
        k = len(uu)
        cols = [np.repeat(curve.grid, k), np.tile(uu, (nt, 1)), ribbon.lattice.reshape(nt * k, M.dim)]
        hdr = ["t"] + [f"u{j + 1}" for j in range(r)] + [f"x{i + 1}" for i in range(M.dim)]
        io.write_csv(_out(cfg, "ribbon.csv"), hdr, cols)
    if "svg" in cfg.formats:
        io.atomic_write(_out(cfg, "theta.svg"),
                        io.svg_polyline(curve.grid, ribbon.theta, "rotation angle", "t", "theta"))
    v = ribbon.verification
    print(f"ribbon built: n = {ribbon.nearest_n}, line-of-curvature residual "
          f"{v['line_of_curvature_residual']:.3e}")
    return EXIT_OK


def transport(cfg):
    M, curve, raw, u = io.load_curve(_single_input(cfg), cfg.resolution, cfg.manifold)
    v0 = np.asarray(cfg.vector if cfg.vector is not None else np.eye(M.dim)[0], dtype=float)
    if v0.shape != (M.dim,):
        raise ValidationError(f"--vector needs {M.dim} components")
    V = parallel_transport(M, curve, v0)
    g = M.metric_at(curve.points)
    norms = np.sqrt(np.einsum("ni,nij,nj->n", V, g, V))
    out = {"length": curve.length, "closed": curve.closed, "initial": v0, "final": V[-1],
           "norm_drift": float(np.abs(norms - norms[0]).max()), "config": cfg.echo()}
    if curve.closed and M.dim == 2:
        a, b = V[0], V[-1]
        cross = (a[0] * b[1] - a[1] * b[0]) * np.sqrt(np.linalg.det(g[0]))
        out["holonomy_angle"] = float(np.arctan2(cross, a @ g[0] @ b))
    if "json" in cfg.formats:
        io.write_json(_out(cfg, "transport.json"), out)
    if "csv" in cfg.formats:
        hdr = ["t"] + [f"v{i + 1}" for i in range(M.dim)] + ["norm"]
        io.write_csv(_out(cfg, "transport.csv"), hdr, [curve.grid, V, norms])
    if "svg" in cfg.formats:
        io.atomic_write(_out(cfg, "transport.svg"),
                        io.svg_polyline(curve.grid, norms - norms[0], "norm drift", "t", "drift"))
    print(f"transported over length {curve.length:.12g}; norm drift {out['norm_drift']:.3e}")
    return EXIT_OK


DEMO_INPUTS = {
    "helix.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.helix(1.0, 0.5, turns=2.0, n=512)),
    "ellipse.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.ellipse(2.0, 1.0, n=512)),
    "line.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.line(n=64)),
    "circle.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.circle(1.0, n=512)),
    "spherical.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3},
        library.wavy_spherical([0.1, 0.03], [0.3, 1.1], n=512)),
    "coil-2pi.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.prescribed_total_torsion(2 * np.pi, n=512)),
    "coil-pi.json": lambda: io.curve_document(
        {"kind": "euclidean", "dim": 3}, library.prescribed_total_torsion(np.pi, n=512)),
    "latitude.json": lambda: io.curve_document(
        {"kind": "sphere", "dim": 2}, library.latitude_in_chart(np.pi / 3, n=512)[1]),
}


def demo(cfg):
    """Write the demo curve files, then analyze and build ribbons from them."""
    inputs = os.path.join(cfg.out, "inputs")
    os.makedirs(inputs, exist_ok=True)
    for name, make in DEMO_INPUTS.items():
        io.write_json(os.path.join(inputs, name), make())
    circle = library.circle(1.0, n=512)
    io.write_json(os.path.join(inputs, "circle-normal.json"),
                  {"normal": -circle.points[:-1]})
    runs = [("analyze", "helix.json", {}), ("analyze", "ellipse.json", {}),
            ("analyze", "spherical.json", {}),
            ("construct", "circle.json", {"normal": os.path.join(inputs, "circle-normal.json")}),
            ("construct", "coil-2pi.json", {}),
            ("transport", "latitude.json", {"vector": [1.0, 0.0]})]
    codes = []
    for command, name, extra in runs:
        sub = RunConfig(command, [os.path.join(inputs, name)], resolution=cfg.resolution,
                        tol=cfg.tol, out=os.path.join(cfg.out, f"{command}-{name[:-5]}"),
                        formats=cfg.formats, **extra).validate()
        print(f"== {command} {name}")
        codes.append(_dispatch(sub))
    return max(codes)


COMMANDS = {"analyze": analyze, "verify": verify, "construct": construct,
            "transport": transport, "demo": demo}


def _dispatch(cfg):
    try:
        return COMMANDS[cfg.command](cfg)
    except SeamMismatch as exc:
        n = exc.nearest_n
        print(f"error: SeamMismatch: {exc}\n  measured total geodesic torsion {exc.total:.12g}; "
              f"nearest 2*pi*n = {2 * np.pi * n:.12g} (n = {n})", file=sys.stderr)
        return EXIT_SEAM
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ConvexContradiction, TorsionKitError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def build_parser():
    p = argparse.ArgumentParser(prog="torsionkit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", action="append", default=[], help="curve JSON file")
    p.add_argument("--manifold", help="manifold spec (JSON or file), overrides the curve file")
    p.add_argument("--surface", help='surface spec, e.g. {"kind": "ellipsoid", "semiaxes": [2, 1.5, 1]}')
    p.add_argument("--resolution", type=int, default=DEFAULT_NODES, help="grid intervals")
    p.add_argument("--tol", type=float, default=QUANT_TOL, help="quantization tolerance")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", default="json,csv", help="comma list from json,csv,svg")
    p.add_argument("--normal", default="principal", help='"principal" or a normal-samples JSON file')
    p.add_argument("--suite", default="core", help="scenario suite or comma list")
    p.add_argument("--vector", help="initial vector for transport, comma separated")
    return p


def config_from_args(args):
    vector = None
    if args.vector is not None:
        try:
            vector = [float(v) for v in args.vector.split(",")]
        except ValueError:
            raise ValidationError(f"--vector must be numbers separated by commas: {args.vector!r}") from None
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    return RunConfig(args.command, list(args.input), _json_arg(args.manifold, "manifold"),
                     _json_arg(args.surface, "surface"), args.resolution, args.tol, args.out,
                     formats, args.normal, args.suite, vector).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return _dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
