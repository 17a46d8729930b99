"""Minimal SVG line plot of a branch mu(xi), written without a plotting library."""

from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 20, 50


def nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    x = start
    while x <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(x) < 1e-12 * step else x)
        x += step
    return ticks


def branch_svg(xi, mu, xlabel: str = "xi", ylabel: str = "mu") -> str:
    xi = np.asarray(xi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    keep = np.isfinite(xi) & np.isfinite(mu)
    xi, mu = xi[keep], mu[keep]
    if xi.size == 0:
        xlo, xhi, ylo, yhi = 0.0, 1.0, 0.0, 1.0
    else:
        xlo, xhi = float(xi.min()), float(xi.max())
        ylo, yhi = float(mu.min()), float(mu.max())
        if xhi == xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        pad = 0.05 * (yhi - ylo) if yhi > ylo else 0.5 * max(abs(ylo), 1e-3)
        ylo, yhi = ylo - pad, yhi + pad
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return MARGIN_T + (yhi - y) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in nice_ticks(xlo, xhi):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in nice_ticks(ylo, yhi):
        y = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    if ylo < 0 < yhi:
        out.append(f'<line x1="{MARGIN_L}" y1="{sy(0):.2f}" x2="{MARGIN_L + pw}" y2="{sy(0):.2f}" '
                   'stroke="gray" stroke-dasharray="4 3"/>')
    if xi.size:
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xi, mu))
        out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    out.append(f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{MARGIN_T + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {MARGIN_T + ph / 2})">{ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
