"""Minimal SVG line plots for experiment outputs.

The CSVs are the contract; these figures are documentation aids, so the
plotter stays deliberately small: linear axes, nice-number ticks, polyline
series, a text legend. Output is deterministic for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")

_MARGIN_L = 72
_MARGIN_R = 18
_MARGIN_T = 34
_MARGIN_B = 46
_MAX_POINTS = 4000  # polylines are decimated beyond this, keeping endpoints


@dataclass(frozen=True)
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str | None = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or x.size == 0:
            raise ValueError(f"series needs matching non-empty 1-D x/y, got {x.shape} vs {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class Panel:
    series: tuple[Series, ...]
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    legend: bool = True

    def __post_init__(self) -> None:
        if not self.series:
            raise ValueError("panel needs at least one series")
        object.__setattr__(self, "series", tuple(self.series))


def _nice_step(span: float) -> float:
    """Largest of {1, 2, 2.5, 5} x 10^n giving at least 4 intervals over span."""
    if span <= 0:
        return 1.0
    raw = span / 4.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (5.0, 2.5, 2.0, 1.0):
        if m * mag <= raw:
            return m * mag
    return mag


def _ticks(lo: float, hi: float) -> list[float]:
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 0.5
        lo, hi = lo - pad, hi + pad
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * abs(step):
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _decimate(arr: np.ndarray) -> np.ndarray:
    n = arr.size
    if n <= _MAX_POINTS:
        return arr
    stride = -(-n // _MAX_POINTS)
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return arr[idx]


def _render_panel(panel: Panel, width: int, height: int, y_offset: int) -> list[str]:
    xs = np.concatenate([s.x for s in panel.series])
    ys = np.concatenate([s.y for s in panel.series])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi == y_lo:
        pad = max(abs(y_lo), 1.0) * 0.1
        y_lo, y_hi = y_lo - pad, y_hi + pad
    y_pad = 0.06 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    px0, px1 = _MARGIN_L, width - _MARGIN_R
    py0, py1 = y_offset + _MARGIN_T, y_offset + height - _MARGIN_B

    def sx(x: float) -> float:
        return px0 + (x - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def sy(y: float) -> float:
        return py1 - (y - y_lo) / (y_hi - y_lo) * (py1 - py0)

    out = []
    out.append(
        f'<rect x="{px0}" y="{py0}" width="{px1 - px0}" height="{py1 - py0}" '
        f'fill="none" stroke="#888" stroke-width="1"/>'
    )
    if panel.title:
        out.append(
            f'<text x="{(px0 + px1) / 2:.1f}" y="{py0 - 12}" text-anchor="middle" '
            f'font-size="13" font-weight="bold">{panel.title}</text>'
        )
    for t in _ticks(x_lo, x_hi):
        x = sx(t)
        out.append(
            f'<line x1="{x:.2f}" y1="{py1}" x2="{x:.2f}" y2="{py1 + 5}" stroke="#888"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{py1 + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        out.append(
            f'<line x1="{px0 - 5}" y1="{y:.2f}" x2="{px0}" y2="{y:.2f}" stroke="#888"/>'
        )
        out.append(
            f'<line x1="{px0}" y1="{y:.2f}" x2="{px1}" y2="{y:.2f}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{px0 - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{_fmt(t)}</text>'
        )
    if panel.x_label:
        out.append(
            f'<text x="{(px0 + px1) / 2:.1f}" y="{py1 + 36}" text-anchor="middle" '
            f'font-size="12">{panel.x_label}</text>'
        )
    if panel.y_label:
        cx, cy = px0 - 52, (py0 + py1) / 2
        out.append(
            f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 {cx} {cy:.1f})">{panel.y_label}</text>'
        )
    for i, s in enumerate(panel.series):
        color = s.color or PALETTE[i % len(PALETTE)]
        x_dec = _decimate(s.x)
        y_dec = _decimate(s.y)
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(x_dec, y_dec))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if panel.legend:
            lx, ly = px1 - 150, py0 + 16 + 16 * i
            out.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            out.append(f'<text x="{lx + 28}" y="{ly}" font-size="11">{s.label}</text>')
    return out


def render_svg(panels: list[Panel], width: int = 860, panel_height: int = 360) -> str:
    """Render stacked panels into one standalone SVG document."""
    if not panels:
        raise ValueError("need at least one panel")
    total_h = panel_height * len(panels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" '
        f'viewBox="0 0 {width} {total_h}" font-family="monospace">',
        f'<rect x="0" y="0" width="{width}" height="{total_h}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        parts.extend(_render_panel(panel, width, panel_height, i * panel_height))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
