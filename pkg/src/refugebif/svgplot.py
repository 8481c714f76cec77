"""Self-contained SVG 1.1 line charts, deterministic byte-for-byte.

Matplotlib is avoided on purpose: its SVG output embeds run-dependent ids,
which would break the bitwise-reproducibility contract of the emitted
artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

NONLINEAR_COLOR = "#1f77b4"  # blue, marker x
LINEAR_COLOR = "#ff7f0e"     # orange, marker o

_PANEL_W = 320
_PANEL_H = 300
_MARGIN = {"left": 54, "right": 14, "top": 30, "bottom": 42}


@dataclass(frozen=True)
class Series:
    xs: tuple
    ys: tuple
    label: str
    color: str
    marker: str  # "x" or "o"


@dataclass(frozen=True)
class Panel:
    title: str
    series: tuple
    x_label: str
    y_label: str


def _nice_ticks(lo: float, hi: float, target: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(round(t / step) * step)
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def _marker_svg(x: float, y: float, marker: str, color: str) -> str:
    r = 3.0
    if marker == "x":
        return (
            f'<path d="M{x - r:.2f} {y - r:.2f}L{x + r:.2f} {y + r:.2f}'
            f'M{x - r:.2f} {y + r:.2f}L{x + r:.2f} {y - r:.2f}" '
            f'stroke="{color}" fill="none" stroke-width="1.2"/>'
        )
    return (
        f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" '
        f'stroke="{color}" fill="none" stroke-width="1.2"/>'
    )


def _panel_svg(panel: Panel, x_off: int) -> list[str]:
    left = x_off + _MARGIN["left"]
    top = _MARGIN["top"]
    plot_w = _PANEL_W - _MARGIN["left"] - _MARGIN["right"]
    plot_h = _PANEL_H - _MARGIN["top"] - _MARGIN["bottom"]

    xs_all = [x for s in panel.series for x in s.xs]
    ys_all = [y for s in panel.series for y in s.ys]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    y_lo = min(y_lo, 0.0)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad_x = 0.04 * (x_hi - x_lo)
    pad_y = 0.04 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo, y_hi + pad_y

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    ]
    for t in _nice_ticks(x_lo, x_hi):
        if t < x_lo or t > x_hi:
            continue
        x = px(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{top + plot_h}" x2="{x:.2f}" '
            f'y2="{top + plot_h + 4}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 16}" font-size="10" '
            f'text-anchor="middle">{_fmt_tick(t)}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        if t < y_lo or t > y_hi:
            continue
        y = py(t)
        parts.append(
            f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" '
            'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 7}" y="{y + 3:.2f}" font-size="10" '
            f'text-anchor="end">{_fmt_tick(t)}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{top + plot_h + 32}" font-size="11" '
        f'text-anchor="middle">{panel.x_label}</text>'
    )
    parts.append(
        f'<text x="{x_off + 14}" y="{top + plot_h / 2:.2f}" font-size="11" '
        f'text-anchor="middle" transform="rotate(-90 {x_off + 14} '
        f'{top + plot_h / 2:.2f})">{panel.y_label}</text>'
    )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{top - 10}" font-size="12" '
        f'text-anchor="middle">{panel.title}</text>'
    )

    for si, series in enumerate(panel.series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(series.xs, series.ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{series.color}" '
            'stroke-width="1.4"/>'
        )
        for x, y in zip(series.xs, series.ys):
            parts.append(_marker_svg(px(x), py(y), series.marker, series.color))
        lx = left + 8
        ly = top + 14 + 14 * si
        parts.append(_marker_svg(lx, ly - 3, series.marker, series.color))
        parts.append(
            f'<text x="{lx + 8}" y="{ly}" font-size="10">{series.label}</text>'
        )
    return parts


def render(panels) -> str:
    """Render panels side by side into one SVG document string."""
    panels = tuple(panels)
    width = _PANEL_W * len(panels)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{_PANEL_H}" viewBox="0 0 {width} {_PANEL_H}">',
        f'<rect width="{width}" height="{_PANEL_H}" fill="#ffffff"/>',
        '<g font-family="Helvetica,Arial,sans-serif" fill="#111111">',
    ]
    for i, panel in enumerate(panels):
        parts.extend(_panel_svg(panel, i * _PANEL_W))
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
