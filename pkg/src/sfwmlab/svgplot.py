"""Minimal dependency-free SVG line/step plots for simulation output.

Convenience output only; the CSV files are the contract.
"""

from __future__ import annotations

import math


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw_step = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw_step:
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(t)
        t += step
    return ticks or [lo]


def write_svg(
    path,
    x,
    y,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    step: bool = False,
    log_y: bool = False,
) -> None:
    """Write a single-series line (or step) plot as a standalone SVG file."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys) or not xs:
        raise ValueError("x and y must be equal-length, non-empty sequences")
    if log_y:
        floor = min((v for v in ys if v > 0), default=1.0)
        ys = [math.log10(max(v, floor * 1e-3)) for v in ys]

    width, height = 720, 480
    ml, mr, mt, mb = 70, 20, 40, 55
    pw, ph = width - ml - mr, height - mt - mb

    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    points = []
    if step:
        for i, (xv, yv) in enumerate(zip(xs, ys)):
            points.append((px(xv), py(yv)))
            if i + 1 < len(xs):
                points.append((px(xs[i + 1]), py(yv)))
    else:
        points = [(px(xv), py(yv)) for xv, yv in zip(xs, ys)]
    path_d = " ".join(
        f"{'M' if i == 0 else 'L'}{p[0]:.2f},{p[1]:.2f}" for i, p in enumerate(points)
    )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        'stroke="#888" stroke-width="1"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        xp = px(t)
        parts.append(f'<line x1="{xp:.2f}" y1="{mt + ph}" x2="{xp:.2f}" '
                     f'y2="{mt + ph + 5}" stroke="#444"/>')
        parts.append(f'<text x="{xp:.2f}" y="{mt + ph + 20}" font-size="12" '
                     f'text-anchor="middle" font-family="sans-serif">{t:.4g}</text>')
    for t in _ticks(y_lo, y_hi):
        yp = py(t)
        label = f"1e{t:.3g}" if log_y else f"{t:.4g}"
        parts.append(f'<line x1="{ml - 5}" y1="{yp:.2f}" x2="{ml}" y2="{yp:.2f}" '
                     'stroke="#444"/>')
        parts.append(f'<text x="{ml - 8}" y="{yp + 4:.2f}" font-size="12" '
                     f'text-anchor="end" font-family="sans-serif">{label}</text>')
    parts.append(f'<path d="{path_d}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>')
    if title:
        parts.append(f'<text x="{width / 2}" y="24" font-size="15" text-anchor="middle" '
                     f'font-family="sans-serif">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{ml + pw / 2}" y="{height - 12}" font-size="13" '
                     f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="18" y="{mt + ph / 2}" font-size="13" text-anchor="middle" '
                     f'font-family="sans-serif" transform="rotate(-90 18 {mt + ph / 2})">'
                     f'{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
