"""Minimal deterministic SVG line plots.

Hand-rolled on purpose: the emitted files are part of the artifact's
contract (one <polyline> per series, axes as <line> elements) and must be
byte-identical across reruns, which rules out plotting libraries with
run-dependent internal ids.
"""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64.0, 16.0, 28.0, 44.0


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Roughly n round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((s for s in (1.0, 2.0, 2.5, 5.0, 10.0)), key=lambda s: abs(s * mag - raw)) * mag
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def line_plot(path, x, series, *, title: str = "", x_label: str = "",
              y_label: str = "", marks=(), width: int = 800, height: int = 480) -> None:
    """Write an SVG with one polyline per (label, ys) series.

    `marks` are x positions drawn as dashed vertical lines (event instants).
    """
    xs = list(x)
    if not xs or not series:
        raise ValueError("line_plot needs at least one point and one series")
    x_lo, x_hi = min(xs), max(xs)
    y_lo = min(min(ys) for _, ys in series)
    y_hi = max(max(ys) for _, ys in series)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(v: float) -> float:
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{title}</text>')
    # axes
    x0, y0 = _MARGIN_L, _MARGIN_T + plot_h
    out.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0 + plot_w:.1f}" y2="{y0:.1f}" '
               f'stroke="black" stroke-width="1"/>')
    out.append(f'<line x1="{x0:.1f}" y1="{_MARGIN_T:.1f}" x2="{x0:.1f}" y2="{y0:.1f}" '
               f'stroke="black" stroke-width="1"/>')
    for tv in _ticks(x_lo, x_hi):
        tx = px(tv)
        out.append(f'<line x1="{tx:.1f}" y1="{y0:.1f}" x2="{tx:.1f}" y2="{y0 + 5:.1f}" '
                   f'stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{tx:.1f}" y="{y0 + 18:.1f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{tv:.6g}</text>')
    for tv in _ticks(y_lo, y_hi):
        ty = py(tv)
        out.append(f'<line x1="{x0 - 5:.1f}" y1="{ty:.1f}" x2="{x0:.1f}" y2="{ty:.1f}" '
                   f'stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{x0 - 8:.1f}" y="{ty + 4:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{tv:.6g}</text>')
    if x_label:
        out.append(f'<text x="{x0 + plot_w / 2:.1f}" y="{height - 8:.1f}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="12">'
                   f'{x_label}</text>')
    if y_label:
        out.append(f'<text x="14" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 14 {_MARGIN_T + plot_h / 2:.1f})">{y_label}</text>')
    for mv in marks:
        mx = px(mv)
        out.append(f'<line x1="{mx:.1f}" y1="{_MARGIN_T:.1f}" x2="{mx:.1f}" y2="{y0:.1f}" '
                   f'stroke="#888888" stroke-width="1" stroke-dasharray="4 3"/>')
    for i, (label, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        out.append(f'<text x="{x0 + plot_w - 6:.1f}" y="{_MARGIN_T + 16 + 16 * i:.1f}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="12" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
