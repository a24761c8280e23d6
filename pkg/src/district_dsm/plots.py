"""Static SVG line charts.

Output depends only on the input numbers (fixed float formatting, no
timestamps), so repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
WIDTH, HEIGHT = 720, 400
MARGIN = dict(left=70, right=150, top=40, bottom=50)


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + 0.5 * step, step)
    return [float(t) for t in ticks if lo - 1e-9 * step <= t <= hi + 1e-9 * step]


def _num(v):
    return f"{v:.2f}"


def _label(v):
    return f"{v:.6g}"


def line_chart(path, series, title="", xlabel="", ylabel="", hline=None):
    """Write a multi-series line chart.

    ``series`` is a list of ``(label, xs, ys)``. ``hline`` draws a dashed
    horizontal reference line (e.g. the baseline score of 1.0).
    """
    xs_all = np.concatenate([np.asarray(x, float) for _, x, _ in series]) if series else np.zeros(1)
    ys_all = np.concatenate([np.asarray(y, float) for _, _, y in series]) if series else np.zeros(1)
    if hline is not None:
        ys_all = np.append(ys_all, hline)
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else max(abs(y_hi) * 0.05, 0.5)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    sx = lambda v: left + (v - x_lo) / (x_hi - x_lo) * pw
    sy = lambda v: top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x_lo, x_hi):
        x = sx(t)
        out.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{top + ph + 18}" text-anchor="middle">{_label(t)}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{_num(y)}" x2="{left + pw}" y2="{_num(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{_num(y + 4)}" text-anchor="end">{_label(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    if hline is not None:
        y = _num(sy(hline))
        out.append(f'<line x1="{left}" y1="{y}" x2="{left + pw}" y2="{y}" stroke="gray" stroke-dasharray="6 4"/>')
    for k, (name, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in zip(np.asarray(xs, float), np.asarray(ys, float)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 10 + 18 * k
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
