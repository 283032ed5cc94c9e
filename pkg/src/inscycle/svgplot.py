"""Dependency-free SVG line plots.

Hand-emitted polylines with axes and tick labels; good enough for the
qualitative figures (u, p, Y, density, sample paths) without pulling in a
plotting stack.
"""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50  # margins


def _ticks(lo, hi, n=6):
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10 ** np.floor(np.log10(span / n))
    for m in (1, 2, 5, 10):
        if span / (step * m) <= n:
            step *= m
            break
    first = np.ceil(lo / step) * step
    return list(np.arange(first, hi + step / 2, step))


def _fmt(v):
    return f"{v:.6g}"


def line_plot(path, xs, series, labels=None, title="", xlabel="", ylabel=""):
    """Write a standalone SVG with one polyline per series.

    xs is shared by all series, or a list of per-series x arrays.
    """
    if not isinstance(series, (list, tuple)):
        series = [series]
    if not isinstance(xs, (list, tuple)):
        xs = [xs] * len(series)
    labels = labels or [""] * len(series)

    xlo = min(float(np.min(x)) for x in xs)
    xhi = max(float(np.max(x)) for x in xs)
    ylo = min(float(np.min(y)) for y in series)
    yhi = max(float(np.max(y)) for y in series)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def X(v):
        return _ML + (v - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def Y(v):
        return _H - _MB - (v - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    out.append(
        f'<path d="M {_ML} {_MT} V {_H - _MB} H {_W - _MR}" fill="none" '
        f'stroke="black" stroke-width="1"/>')
    for tx in _ticks(xlo, xhi):
        px = X(tx)
        out.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" '
                   f'y2="{_H - _MB + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{_fmt(tx)}</text>')
    for ty in _ticks(ylo, yhi):
        py = Y(ty)
        out.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" '
                   f'y2="{py:.1f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>')
    out.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'font-size="13">{xlabel}</text>')
    out.append(f'<text x="16" y="{(_MT + _H - _MB) / 2}" '
               f'text-anchor="middle" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">{ylabel}'
               f'</text>')

    for i, (x, y) in enumerate(zip(xs, series)):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # thin very dense series; SVG does not need 1e5 vertices
        if x.size > 4000:
            idx = np.linspace(0, x.size - 1, 4000).astype(int)
            x, y = x[idx], y[idx]
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x, y))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        if labels[i]:
            out.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 16 * i}" '
                       f'text-anchor="end" font-family="sans-serif" '
                       f'font-size="12" fill="{color}">{labels[i]}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
