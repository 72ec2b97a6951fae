"""Tiny deterministic SVG line-plot writer.

Plots are always rendered from CSV-backed arrays so artifacts can be
regenerated from files alone; output contains no timestamps or randomness.
"""

from __future__ import annotations

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 34, 50


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, count)


def line_plot_svg(path, series, title="", xlabel="", ylabel="", equal_axes=False):
    """Write a polyline plot; ``series`` is a list of (x, y, label) triples."""
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    xlo, xhi = float(xs.min()), float(xs.max())
    ylo, yhi = float(ys.min()), float(ys.max())
    if xhi - xlo < 1e-12:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    padx = 0.05 * (xhi - xlo)
    pady = 0.05 * (yhi - ylo)
    xlo, xhi = xlo - padx, xhi + padx
    ylo, yhi = ylo - pady, yhi + pady
    if equal_axes:
        span = max(xhi - xlo, yhi - ylo)
        cx, cy = 0.5 * (xlo + xhi), 0.5 * (ylo + yhi)
        xlo, xhi = cx - 0.5 * span, cx + 0.5 * span
        ylo, yhi = cy - 0.5 * span, cy + 0.5 * span

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return _MT + (yhi - y) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#222222" stroke-width="1"/>',
    ]
    if title:
        out.append(
            f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for tx in _ticks(xlo, xhi):
        out.append(
            f'<line x1="{px(tx):.2f}" y1="{_MT + ph}" x2="{px(tx):.2f}" '
            f'y2="{_MT + ph + 5}" stroke="#222222"/>'
        )
        out.append(
            f'<text x="{px(tx):.2f}" y="{_MT + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.3g}</text>'
        )
    for ty in _ticks(ylo, yhi):
        out.append(
            f'<line x1="{_ML - 5}" y1="{py(ty):.2f}" x2="{_ML}" '
            f'y2="{py(ty):.2f}" stroke="#222222"/>'
        )
        out.append(
            f'<text x="{_ML - 8}" y="{py(ty) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.3g}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_ML + pw / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{_MT + ph / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_MT + ph / 2:.1f})">{ylabel}</text>'
        )
    for i, (x, y, label) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(x, y)
        )
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if label:
            ly = _MT + 16 + 16 * i
            out.append(
                f'<line x1="{_ML + 8}" y1="{ly - 4}" x2="{_ML + 30}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
            out.append(
                f'<text x="{_ML + 36}" y="{ly}" font-family="sans-serif" '
                f'font-size="11">{label}</text>'
            )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
