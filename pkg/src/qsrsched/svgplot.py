"""Minimal standalone SVG line plots (stacked panels sharing the x axis)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, PANEL_H = 720, 200
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 40


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _decimate(x, y, max_pts=1500):
    if x.size <= max_pts:
        return x, y
    idx = np.unique(np.linspace(0, x.size - 1, max_pts).astype(int))
    return x[idx], y[idx]


def render(panels, x, title="", xlabel="t [s]") -> str:
    """panels: list of (ylabel, {legend: y-array}). Returns SVG text."""
    x = np.asarray(x, dtype=float)
    height = MARGIN_T + len(panels) * PANEL_H + MARGIN_B
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    x_lo, x_hi = float(x[0]), float(x[-1]) if x[-1] > x[0] else float(x[0]) + 1.0
    sx = lambda v: MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w
    for p, (ylabel, series) in enumerate(panels):
        top = MARGIN_T + p * PANEL_H
        ph = PANEL_H - 25
        values = np.concatenate([np.ravel(v) for v in series.values()]) if series else np.zeros(1)
        values = values[np.isfinite(values)]
        y_lo, y_hi = (float(values.min()), float(values.max())) if values.size else (0.0, 1.0)
        if y_hi - y_lo < 1e-12:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad
        sy = lambda v: top + ph - (v - y_lo) / (y_hi - y_lo) * ph
        parts.append(f'<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{ph}" fill="none" stroke="#444"/>')
        for tv in _ticks(y_lo, y_hi):
            parts.append(f'<line x1="{MARGIN_L}" x2="{MARGIN_L + plot_w}" y1="{sy(tv):.1f}" y2="{sy(tv):.1f}" stroke="#ddd"/>')
            parts.append(f'<text x="{MARGIN_L - 4}" y="{sy(tv) + 4:.1f}" text-anchor="end">{tv:.4g}</text>')
        if p == len(panels) - 1:
            for tv in _ticks(x_lo, x_hi):
                parts.append(f'<text x="{sx(tv):.1f}" y="{top + ph + 14}" text-anchor="middle">{tv:.4g}</text>')
            parts.append(f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{top + ph + 30}" text-anchor="middle">{escape(xlabel)}</text>')
        parts.append(
            f'<text x="14" y="{top + ph / 2:.1f}" transform="rotate(-90 14 {top + ph / 2:.1f})" '
            f'text-anchor="middle">{escape(ylabel)}</text>'
        )
        for k, (name, y) in enumerate(series.items()):
            xd, yd = _decimate(x, np.asarray(y, dtype=float))
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xd, yd))
            color = COLORS[k % len(COLORS)]
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
            parts.append(
                f'<text x="{MARGIN_L + 8 + 110 * k}" y="{top + 12}" fill="{color}">{escape(name)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
