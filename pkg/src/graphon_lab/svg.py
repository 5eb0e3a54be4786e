"""Dependency-free SVG line plots for experiment summaries.

Only what the error curves need: a linear or log-spaced x axis, a log10 y
axis, one polyline per series, and optional shaded quantile bands drawn
as polygons.  Richer plotting should consume the emitted CSV instead.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

__all__ = ["line_plot"]

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 50

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Axes:
    def __init__(self, xs: Sequence[float], ys: Sequence[float], logx: bool):
        self.logx = logx
        fx = [math.log10(x) for x in xs] if logx else list(xs)
        self.x0, self.x1 = min(fx), max(fx)
        if self.x0 == self.x1:
            self.x0 -= 0.5
            self.x1 += 0.5
        ys = [y for y in ys if y > 0]
        ly = [math.log10(y) for y in ys] if ys else [0.0]
        self.y0 = math.floor(min(ly) * 2) / 2
        self.y1 = math.ceil(max(ly) * 2) / 2
        if self.y0 == self.y1:
            self.y1 += 0.5

    def px(self, x: float) -> float:
        fx = math.log10(x) if self.logx else x
        w = _WIDTH - _MARGIN_L - _MARGIN_R
        return _MARGIN_L + (fx - self.x0) / (self.x1 - self.x0) * w

    def py(self, y: float) -> float:
        ly = math.log10(max(y, 1e-300))
        h = _HEIGHT - _MARGIN_T - _MARGIN_B
        return _HEIGHT - _MARGIN_B - (ly - self.y0) / (self.y1 - self.y0) * h


def line_plot(
    path: str,
    series: List[Tuple[str, Sequence[float], Sequence[float]]],
    bands: Optional[List[Tuple[str, Sequence[float], Sequence[float], Sequence[float]]]] = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
) -> None:
    """Write a log-y line plot; one ``<polyline>`` per series.

    ``series`` entries are ``(label, xs, ys)``; ``bands`` entries are
    ``(label, xs, lower, upper)`` and render as shaded polygons behind
    the lines.
    """
    bands = bands or []
    all_x = [x for _, xs, *_ in series + bands for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    all_y += [y for _, _, lo, hi in bands for y in list(lo) + list(hi)]
    ax = _Axes(all_x, all_y, logx)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    # frame
    x_left, x_right = _MARGIN_L, _WIDTH - _MARGIN_R
    y_top, y_bot = _MARGIN_T, _HEIGHT - _MARGIN_B
    parts.append(
        f'<rect x="{x_left}" y="{y_top}" width="{x_right - x_left}" '
        f'height="{y_bot - y_top}" fill="none" stroke="#444"/>'
    )
    # y ticks at half decades
    tick = ax.y0
    while tick <= ax.y1 + 1e-9:
        py = ax.py(10**tick)
        parts.append(
            f'<line x1="{x_left - 4}" y1="{_fmt(py)}" x2="{x_left}" y2="{_fmt(py)}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{x_left - 8}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">1e{_fmt(tick)}</text>'
        )
        tick += 0.5
    # x ticks at the data points of the first series
    for x in sorted(set(series[0][1])) if series else []:
        px = ax.px(x)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{y_bot}" x2="{_fmt(px)}" y2="{y_bot + 4}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{y_bot + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(x)}</text>'
        )
    for label, xs, lo, hi in bands:
        color = _PALETTE[[b[0] for b in bands].index(label) % len(_PALETTE)]
        pts = [f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(xs, lo)]
        pts += [f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(reversed(list(xs)), reversed(list(hi)))]
        parts.append(
            f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.15" stroke="none"/>'
        )
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        ly = _MARGIN_T + 16 + 16 * i
        lx = _WIDTH - _MARGIN_R + 10
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{lx + 24}" y="{ly}" font-size="11" font-family="sans-serif">{label}</text>'
        )
    if title:
        parts.append(
            f'<text x="{_WIDTH // 2}" y="24" font-size="14" text-anchor="middle" '
            f'font-family="sans-serif">{title}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{(x_left + x_right) // 2}" y="{_HEIGHT - 12}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{(y_top + y_bot) // 2}" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif" transform="rotate(-90 16 {(y_top + y_bot) // 2})">{ylabel}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
