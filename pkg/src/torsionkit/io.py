"""Deterministic file formats: curve JSON, CSV tables, report JSON and SVG plots.

Every float is written with 17 significant digits and files are replaced
atomically, so identical inputs give byte-identical outputs.
"""

import hashlib
import html
import io as _io
import json
import math
import os
import tempfile

import numpy as np

from .curve import SampledCurve, reparametrize_by_arclength
from .exceptions import ValidationError
from .manifold import from_spec as manifold_from_spec

FLOAT_FMT = "%.17g"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return FLOAT_FMT % obj if math.isfinite(obj) else "null"
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}"
                 for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with sorted keys and ``%.17g`` floats (non-finite become null)."""
    return _encode(_plain(obj), indent, 0) + "\n"


def write_json(path, obj):
    atomic_write(path, dumps(obj))


def csv_text(header, columns):
    """CSV with one column per array in ``columns`` (1-D or 2-D, split into columns)."""
    cols = []
    for c in columns:
        c = np.asarray(c, dtype=float)
        cols.extend([c] if c.ndim == 1 else list(c.T))
    table = np.column_stack(cols) if cols else np.empty((0, 0))
    if table.shape[1] != len(header):
        raise ValidationError(f"{len(header)} headers for {table.shape[1]} columns")
    buf = _io.StringIO()
    np.savetxt(buf, table, fmt=FLOAT_FMT, delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def write_csv(path, header, columns):
    atomic_write(path, csv_text(header, columns))


def curve_csv_text(curve):
    header = ["t"] + [f"x{i + 1}" for i in range(curve.dim)]
    return csv_text(header, [curve.grid, curve.points])


def curve_hash(curve):
    """SHA-256 of the curve's CSV export."""
    return hashlib.sha256(curve_csv_text(curve).encode()).hexdigest()


# -- curve input -------------------------------------------------------------------

def parse_curve_document(doc):
    """Validate a curve document ``{"manifold", "closed", "points"}``.

    Returns ``(manifold_spec, closed, points)``.
    """
    if not isinstance(doc, dict):
        raise ValidationError("curve file must hold a JSON object")
    missing = [k for k in ("manifold", "points") if k not in doc]
    if missing:
        raise ValidationError(f"curve file missing {', '.join(missing)}")
    try:
        pts = np.asarray(doc["points"], dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("points must be a list of numeric coordinate lists") from None
    if pts.ndim != 2 or not np.all(np.isfinite(pts)):
        raise ValidationError(f"points must be a finite 2-D array, got shape {pts.shape}")
    closed = doc.get("closed", False)
    if not isinstance(closed, bool):
        raise ValidationError("closed must be true or false")
    return doc["manifold"], closed, pts


def load_curve(path, resolution=None, manifold=None):
    """Read a curve file, build its manifold and reparametrize by arclength.

    ``manifold`` overrides the spec stored in the file. Returns
    ``(M, curve, raw, u)`` where ``raw`` is the curve through the file's
    samples and ``u`` the raw parameters of the output nodes.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None
    spec, closed, pts = parse_curve_document(doc)
    M = manifold_from_spec(manifold if manifold is not None else spec)
    if pts.shape[1] != M.dim:
        raise ValidationError(f"points have {pts.shape[1]} coordinates, manifold has dimension {M.dim}")
    raw = SampledCurve.from_points(pts, closed=closed)
    n = resolution if resolution is not None else raw.n_intervals
    curve, u = reparametrize_by_arclength(M, raw, n=n, return_parameters=True)
    return M, curve, raw, u


def curve_document(manifold_spec, curve_or_points, closed=None):
    pts = getattr(curve_or_points, "points", curve_or_points)
    if closed is None:
        closed = bool(getattr(curve_or_points, "closed", False))
    pts = np.asarray(pts, dtype=float)
    if closed:
        pts = pts[:-1]
    return {"manifold": manifold_spec, "closed": closed, "points": pts}


def load_normal(path, raw, u):
    """Normal samples from ``path`` resampled at raw parameters ``u``.

    The file is a JSON list of vectors, one per raw curve sample, or an
    object with that list under ``"normal"``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("normal")
    vals = np.asarray(doc, dtype=float)
    n_raw = len(raw.grid)
    if raw.closed and len(vals) == n_raw - 1:
        vals = np.vstack([vals, vals[:1]])
    if vals.shape != raw.points.shape:
        raise ValidationError(f"normal samples have shape {vals.shape}, expected {raw.points.shape}")
    return raw.interpolate(vals, u)


# -- SVG ---------------------------------------------------------------------------

def svg_polyline(x, y, title="", xlabel="t", ylabel="", width=640, height=360):
    """Minimal line plot: frame, zero line, data polyline and labels."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    title, xlabel, ylabel = (html.escape(s) for s in (title, xlabel, ylabel))
    m = 40
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1.0, y1 + 1.0
    if x1 - x0 < 1e-12:
        x1 = x0 + 1.0
    sx = lambda v: m + (v - x0) / (x1 - x0) * (width - 2 * m)
    sy = lambda v: height - m - (v - y0) / (y1 - y0) * (height - 2 * m)
    pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(x, y))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
        'fill="none" stroke="#888"/>',
    ]
    if y0 < 0 < y1:
        parts.append(f'<line x1="{m}" y1="{sy(0):.3f}" x2="{width - m}" y2="{sy(0):.3f}" '
                     'stroke="#ccc"/>')
    parts += [
        f'<polyline fill="none" stroke="#1f4e99" stroke-width="1.5" points="{pts}"/>',
        f'<text x="{width / 2}" y="{m / 2 + 5}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})">'
        f'{ylabel}</text>',
        f'<text x="{m}" y="{height - m + 14}" font-size="10">{x0:.4g}</text>',
        f'<text x="{width - m}" y="{height - m + 14}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{m - 4}" y="{m + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
        f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
