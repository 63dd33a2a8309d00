"""Minimal log-log SVG plots, written without a plotting library."""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
REF_COLORS = ["#555555", "#999999", "#bbbbbb"]

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=80, right=170, top=40, bottom=60)


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def loglog_svg(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    references: Mapping[str, tuple[Sequence[float], Sequence[float]]] = None,
    *,
    title: str = "",
    xlabel: str = "N",
    ylabel: str = "mean squared worst-case error",
) -> str:
    """Render series as markers+lines and references as dashed lines on log-log axes.

    Each mapping value is an ``(x, y)`` pair; non-positive points are skipped.
    """
    references = references or {}
    xs, ys = [], []
    for x, y in list(series.values()) + list(references.values()):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = (x > 0) & (y > 0) & np.isfinite(y)
        xs.extend(x[ok])
        ys.extend(y[ok])
    if not xs:
        raise ValueError("nothing to plot")
    xd = _decades(min(xs), max(xs))
    yd = _decades(min(ys), max(ys))
    if xd[0] == xd[-1]:
        xd.append(xd[0] + 1)
    if yd[0] == yd[-1]:
        yd.append(yd[0] + 1)
    x0, x1 = xd[0], xd[-1]
    y0, y1 = yd[0], yd[-1]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + pw * (math.log10(v) - x0) / (x1 - x0)

    def py(v):
        return MARGIN["top"] + ph * (1.0 - (math.log10(v) - y0) / (y1 - y0))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black"/>',
    ]
    for d in xd:
        x = px(10.0**d)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"]}" x2="{x:.2f}" y2="{MARGIN["top"] + ph}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">1e{d}</text>')
    for d in yd:
        y = py(10.0**d)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.2f})">{escape(ylabel)}</text>'
    )

    legend_y = MARGIN["top"] + 10
    legend_x = MARGIN["left"] + pw + 15

    def polyline(x, y, color, dashed):
        pts = [(px(a), py(b)) for a, b in zip(x, y) if a > 0 and b > 0 and math.isfinite(b)]
        path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        return pts

    for i, (label, (x, y)) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        for a, b in polyline(x, y, color, False):
            out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3.5" fill="{color}"/>')
        out.append(f'<line x1="{legend_x}" y1="{legend_y}" x2="{legend_x + 24}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{legend_x + 30}" y="{legend_y + 4}">{escape(label)}</text>')
        legend_y += 20
    for i, (label, (x, y)) in enumerate(references.items()):
        color = REF_COLORS[i % len(REF_COLORS)]
        polyline(x, y, color, True)
        out.append(f'<line x1="{legend_x}" y1="{legend_y}" x2="{legend_x + 24}" y2="{legend_y}" '
                   f'stroke="{color}" stroke-width="2" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{legend_x + 30}" y="{legend_y + 4}">{escape(label)}</text>')
        legend_y += 20
    out.append("</svg>")
    return "\n".join(out) + "\n"
