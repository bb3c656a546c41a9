"""Minimal deterministic SVG line plots (fixed size, fixed number formatting)."""

from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

WIDTH, HEIGHT = 800, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 40
PALETTE = ("black", "red", "blue", "green", "orange", "purple")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.4g}"


def line_plot(
    lines: Sequence[tuple[np.ndarray, np.ndarray]],
    title: str = "",
    colors: Sequence[str] | None = None,
    labels: Sequence[str] | None = None,
) -> str:
    """Render ``(x, y)`` polylines on shared axes; returns the SVG document."""
    colors = list(colors) if colors else [PALETTE[i % len(PALETTE)] for i in range(len(lines))]
    xs = np.concatenate([np.asarray(x, float) for x, _ in lines])
    ys = np.concatenate([np.asarray(y, float) for _, y in lines])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (np.asarray(x, float) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + (1.0 - (np.asarray(y, float) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="gray"/>',
        f'<text x="{MARGIN_L}" y="{HEIGHT - 20}" font-family="sans-serif" font-size="11">{_label(x0)}</text>',
        f'<text x="{WIDTH - MARGIN_R}" y="{HEIGHT - 20}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{_label(x1)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{MARGIN_T + 10}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{_label(y1)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{MARGIN_T + ph}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{_label(y0)}</text>',
    ]
    for i, ((x, y), color) in enumerate(zip(lines, colors)):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px(x), py(y)))
        label = f' data-label="{escape(labels[i])}"' if labels else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{label} points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(doc: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(doc)
