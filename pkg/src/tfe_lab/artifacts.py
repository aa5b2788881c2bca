"""Deterministic artifact writers: JSON and CSV with 17 significant digits, standalone SVG plots."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParameterError


def format_float(x: float) -> str:
    """``x`` with 17 significant digits; non-finite values map to ``null``."""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _plain(obj):
    """Reduce numpy scalars and arrays, tuples and fractions to JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if obj is None or isinstance(obj, str):
        return obj
    raise ParameterError(f"cannot serialise {type(obj).__name__}")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + ",".join(pad + _encode(v, indent, level + 1) for v in obj) + end + "]"
    if not obj:
        return "{}"
    items = (pad + _json_string(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
    return "{" + ",".join(items) + end + "}"


def _json_string(text: str) -> str:
    import json

    return json.dumps(text, ensure_ascii=True)


def dumps_json(obj, indent: int = 1) -> str:
    """JSON text with floats at 17 significant digits and a trailing newline."""
    return _encode(_plain(obj), indent, 0) + "\n"


def dumps_csv(header, rows) -> str:
    """CSV text (``\\n`` line ends); floats at 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else
                         str(int(v)) if isinstance(v, (int, np.integer)) and not isinstance(v, bool)
                         else format_float(v) for v in row])
    return buf.getvalue()


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class PlotStyle:
    """Minimal plot styling; every field has a default so an empty style is valid."""

    width: int = 640
    height: int = 420
    title: str = ""
    xlabel: str = "y"
    ylabel: str = "F"
    log_x: bool = False
    log_y: bool = False
    palette: tuple = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    extra: dict = field(default_factory=dict)


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _tick_label(t: float) -> str:
    return format(t, ".4g")


def render_svg(series, style: PlotStyle | None = None) -> str:
    """Standalone SVG line plot of ``series``: a list of ``(label, x, y)``.

    Output depends only on the data and the style, so identical input gives
    identical bytes.

    Raises
    ------
    ParameterError
        No series, or a series with no finite points.
    """
    style = style or PlotStyle()
    if not series:
        raise ParameterError("nothing to plot")
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if style.log_x:
            x = np.where(x > 0, np.log10(np.where(x > 0, x, 1.0)), np.nan)
        if style.log_y:
            y = np.where(y > 0, np.log10(np.where(y > 0, y, 1.0)), np.nan)
        ok = np.isfinite(x) & np.isfinite(y)
        if not ok.any():
            raise ParameterError(f"series {label!r} has no finite points")
        prepared.append((str(label), x[ok], y[ok]))
    xs = np.concatenate([p[1] for p in prepared])
    ys = np.concatenate([p[2] for p in prepared])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    margin = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - margin, y_hi + margin

    W, H = style.width, style.height
    left, right, top, bottom = 70, 20, 36 if style.title else 16, 50
    pw, ph = W - left - right, H - top - bottom

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>']
    if style.title:
        out.append(f'<text x="{W / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
                   f'{escape(style.title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _nice_ticks(x_lo, x_hi):
        px = sx(t)
        label = _tick_label(10 ** t if style.log_x else t)
        out.append(f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{top + ph + 18}" text-anchor="middle">{label}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        py = sy(t)
        label = _tick_label(10 ** t if style.log_y else t)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{label}</text>')
    if y_lo < 0.0 < y_hi:
        out.append(f'<line x1="{left}" y1="{sy(0.0):.2f}" x2="{left + pw}" y2="{sy(0.0):.2f}" '
                   f'stroke="#999999" stroke-dasharray="4,3"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{H - 12}" text-anchor="middle">{escape(style.xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{escape(style.ylabel)}</text>')
    for i, (label, x, y) in enumerate(prepared):
        colour = style.palette[i % len(style.palette)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
    if len(prepared) > 1 or prepared[0][0]:
        box_y = top + 8
        for i, (label, _, _) in enumerate(prepared):
            colour = style.palette[i % len(style.palette)]
            ly = box_y + 16 * i
            out.append(f'<line x1="{left + pw - 130}" y1="{ly}" x2="{left + pw - 110}" y2="{ly}" '
                       f'stroke="{colour}" stroke-width="2"/>')
            out.append(f'<text x="{left + pw - 104}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
