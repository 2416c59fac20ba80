"""Minimal static SVG line charts (no plotting dependency, byte-stable output)."""
from __future__ import annotations

from typing import Mapping, Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def line_chart(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    width: int = 640,
    height: int = 360,
    hline: float | None = None,
    vline: float | None = None,
) -> str:
    pad_l, pad_r, pad_t, pad_b = 50, 120, 30, 30
    xs = [x for xv, _ in series.values() for x in xv]
    ys = [y for _, yv in series.values() for y in yv] + ([hline] if hline is not None else [])
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
        f'<text x="{pad_l}" y="18">{title}</text>',
        f'<text x="{pad_l - 4}" y="{pad_t + 4}" text-anchor="end">{y1:.1f}</text>',
        f'<text x="{pad_l - 4}" y="{pad_t + ph}" text-anchor="end">{y0:.1f}</text>',
        f'<text x="{pad_l}" y="{height - 10}">{x0:g}</text>',
        f'<text x="{pad_l + pw}" y="{height - 10}" text-anchor="end">{x1:g}</text>',
    ]
    if hline is not None:
        out.append(f'<line x1="{pad_l}" x2="{pad_l + pw}" y1="{py(hline):.2f}" y2="{py(hline):.2f}" stroke="#bbb" stroke-dasharray="4 3"/>')
    if vline is not None:
        out.append(f'<line x1="{px(vline):.2f}" x2="{px(vline):.2f}" y1="{pad_t}" y2="{pad_t + ph}" stroke="#bbb" stroke-dasharray="4 3"/>')
    for i, (label, (xv, yv)) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xv, yv))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{pad_l + pw + 8}" y="{pad_t + 14 * (i + 1)}" fill="{colour}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
