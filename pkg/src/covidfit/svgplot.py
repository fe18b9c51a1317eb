"""Minimal deterministic SVG line charts with a date axis."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .series import DailySeries

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

WIDTH, HEIGHT = 860, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 230, 40, 50


@dataclass(frozen=True)
class Line:
    label: str
    series: DailySeries
    bold: bool = False


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:g}"


def render(lines: list[Line], title: str = "", y_label: str = "") -> str:
    """Render ``lines`` as one chart and return the SVG text.

    The y axis always includes zero.  Output depends only on the inputs.
    """
    if not lines:
        raise ValueError("nothing to plot")
    start = min(l.series.start_date for l in lines)
    end = max(l.series.end_date for l in lines)
    n_days = max((end - start).days, 1)
    lo = min(0.0, min(float(l.series.values.min()) for l in lines))
    hi = max(0.0, max(float(l.series.values.max()) for l in lines))
    if hi - lo <= 0:
        hi = lo + 1.0
    step = _nice_step(hi - lo)
    lo = math.floor(lo / step) * step
    hi = math.ceil(hi / step) * step

    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(day: dt.date) -> float:
        return LEFT + pw * (day - start).days / n_days

    def py(v: float) -> float:
        return TOP + ph * (hi - v) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')
    # y grid and ticks
    n_ticks = int(round((hi - lo) / step))
    for i in range(n_ticks + 1):
        v = lo + i * step
        y = py(v)
        out.append(f'<line class="grid" x1="{LEFT}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" '
                   f'stroke="#dddddd" stroke-width="0.5"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(v)}</text>')
    # x ticks: about eight dates
    tick_every = max(1, int(math.ceil(n_days / 8)))
    for k in range(0, n_days + 1, tick_every):
        day = start + dt.timedelta(days=k)
        x = px(day)
        out.append(f'<line class="tick" x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" '
                   f'y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 18}" text-anchor="middle">'
                   f'{day.day} {_MONTHS[day.month - 1]}</text>')
    out.append(f'<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    if y_label:
        out.append(f'<text x="16" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {TOP + ph / 2:.0f})">{escape(y_label)}</text>')

    for i, line in enumerate(lines):
        color = PALETTE[i % len(PALETTE)]
        width = 2.5 if line.bold else 1.0
        s = line.series
        pts = " ".join(f"{_fmt(px(d))},{_fmt(py(float(v)))}" for d, v in zip(s.dates, s.values))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{pts}"/>')
        ly = TOP + 14 + 18 * i
        lx = LEFT + pw + 14
        out.append(f'<line class="legend" x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="{width}"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(line.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polylines(svg: str) -> list[np.ndarray]:
    """Extract polyline coordinates from SVG text, as (m, 2) arrays."""
    out = []
    for chunk in svg.split("<polyline")[1:]:
        attr = chunk.split('points="', 1)[1].split('"', 1)[0]
        out.append(np.array([[float(c) for c in p.split(",")] for p in attr.split()]))
    return out


def plot_height() -> int:
    return HEIGHT - TOP - BOTTOM
