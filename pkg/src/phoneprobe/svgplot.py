"""Hand-rolled SVG figures for the three analyses.

matplotlib embeds run-varying ids and metadata, so figures are written as
plain SVG strings instead: same inputs, same bytes.  Each document carries
the config hash and seed in an XML comment.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640.0, 440.0
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64.0, 24.0, 40.0, 52.0

POSITION_COLORS = {1: "#1f77b4", 2: "#ff7f0e", 3: "#2ca02c", 4: "#d62728"}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class _Axes:
    """Linear map from data coordinates to the pixel viewport (y flipped)."""

    def __init__(self, x_range, y_range):
        self.x0, self.x1 = float(x_range[0]), float(x_range[1])
        self.y0, self.y1 = float(y_range[0]), float(y_range[1])
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def x(self, v: float) -> float:
        span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        return MARGIN_LEFT + (float(v) - self.x0) / (self.x1 - self.x0) * span

    def y(self, v: float) -> float:
        span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        return HEIGHT - MARGIN_BOTTOM - (float(v) - self.y0) / (self.y1 - self.y0) * span


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _tick_label(v: float) -> str:
    return f"{v:g}" if abs(v - round(v)) < 1e-9 else f"{v:.2f}"


class _Svg:
    def __init__(self, title: str, config_hash: str, seed: int):
        self.parts: list[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f"<!-- config_hash={config_hash} seed={seed} -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:g}" '
            f'height="{HEIGHT:g}" viewBox="0 0 {WIDTH:g} {HEIGHT:g}">',
            f'<rect width="{WIDTH:g}" height="{HEIGHT:g}" fill="white"/>',
            f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
        ]

    def axes(self, ax: _Axes, x_label: str, y_label: str):
        x_px0, x_px1 = ax.x(ax.x0), ax.x(ax.x1)
        y_px0, y_px1 = ax.y(ax.y0), ax.y(ax.y1)
        self.parts.append(
            f'<line x1="{_fmt(x_px0)}" y1="{_fmt(y_px0)}" x2="{_fmt(x_px1)}" '
            f'y2="{_fmt(y_px0)}" stroke="black" stroke-width="1"/>'
        )
        self.parts.append(
            f'<line x1="{_fmt(x_px0)}" y1="{_fmt(y_px0)}" x2="{_fmt(x_px0)}" '
            f'y2="{_fmt(y_px1)}" stroke="black" stroke-width="1"/>'
        )
        for v in _ticks(ax.x0, ax.x1):
            px = ax.x(v)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{_fmt(y_px0)}" x2="{_fmt(px)}" '
                f'y2="{_fmt(y_px0 + 5)}" stroke="black" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{_fmt(y_px0 + 18)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{_tick_label(v)}</text>'
            )
        for v in _ticks(ax.y0, ax.y1):
            py = ax.y(v)
            self.parts.append(
                f'<line x1="{_fmt(x_px0 - 5)}" y1="{_fmt(py)}" x2="{_fmt(x_px0)}" '
                f'y2="{_fmt(py)}" stroke="black" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(x_px0 - 8)}" y="{_fmt(py + 3)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10">{_tick_label(v)}</text>'
            )
        self.parts.append(
            f'<text x="{_fmt((x_px0 + x_px1) / 2)}" y="{_fmt(HEIGHT - 14)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">{escape(x_label)}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{_fmt((y_px0 + y_px1) / 2)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_fmt((y_px0 + y_px1) / 2)})">{escape(y_label)}</text>'
        )

    def polyline(self, pts_px, stroke, dash=None, elem_id=None, width=1.5):
        if len(pts_px) == 0:
            return
        attrs = [f'points="{" ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts_px)}"',
                 f'fill="none"', f'stroke="{stroke}"', f'stroke-width="{width:g}"']
        if dash:
            attrs.append(f'stroke-dasharray="{dash}"')
        if elem_id:
            attrs.append(f'id="{elem_id}"')
        self.parts.append(f'<polyline {" ".join(attrs)}/>')

    def rect(self, x, y, w, h, fill, opacity=1.0, elem_id=None):
        attrs = [f'x="{_fmt(x)}"', f'y="{_fmt(y)}"', f'width="{_fmt(w)}"',
                 f'height="{_fmt(h)}"', f'fill="{fill}"', f'fill-opacity="{opacity:g}"']
        if elem_id:
            attrs.append(f'id="{elem_id}"')
        self.parts.append(f'<rect {" ".join(attrs)}/>')

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r:g}" fill="{fill}"/>')

    def text(self, x, y, content, size=11, anchor="start", fill="black"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size:g}" fill="{fill}">{escape(content)}</text>'
        )

    def to_string(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def render_window_svg(offsets_ms, accuracy, baseline, mean_duration_ms,
                      config_hash: str, seed: int) -> str:
    """Accuracy and baseline curves with a shaded mean-phone-duration band."""
    doc = _Svg("Phoneme decoding accuracy by time offset", config_hash, seed)
    ax = _Axes((min(offsets_ms), max(offsets_ms)), (0.0, 1.0))
    if mean_duration_ms > 0:
        x0 = ax.x(max(0.0, ax.x0))
        x1 = ax.x(min(mean_duration_ms, ax.x1))
        doc.rect(x0, ax.y(1.0), max(0.0, x1 - x0), ax.y(0.0) - ax.y(1.0),
                 fill="#bbbbbb", opacity=0.35, elem_id="phone_duration_band")
    doc.axes(ax, "Offset from phone onset (ms)", "Accuracy")
    doc.polyline([(ax.x(m), ax.y(a)) for m, a in zip(offsets_ms, accuracy)],
                 stroke="#1f77b4", elem_id="accuracy")
    doc.polyline([(ax.x(m), ax.y(b)) for m, b in zip(offsets_ms, baseline)],
                 stroke="#888888", dash="5 4", elem_id="baseline")
    doc.text(ax.x(ax.x0) + 8, ax.y(1.0) + 14, "accuracy", fill="#1f77b4")
    doc.text(ax.x(ax.x0) + 8, ax.y(1.0) + 28, "baseline", fill="#888888")
    return doc.to_string()


def render_tg_svg(contours_by_position: dict[int, list[tuple[float, list]]],
                  shifts_ms: dict[int, float], config_hash: str, seed: int) -> str:
    """Superimposed per-position TG contours; each position is shifted right
    by the cumulative mean duration of its preceding positions.  Thresholds
    below the highest are drawn dotted."""
    doc = _Svg("Temporal generalization contours", config_hash, seed)
    xs: list[float] = []
    ys: list[float] = []
    thresholds: list[float] = []
    for position, entries in contours_by_position.items():
        shift = shifts_ms.get(position, 0.0)
        for threshold, polylines in entries:
            thresholds.append(threshold)
            for poly in polylines:
                for train_ms, test_ms in poly:
                    xs.append(test_ms + shift)
                    ys.append(train_ms)
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    top = max(thresholds) if thresholds else None
    ax = _Axes((min(xs), max(xs)), (min(ys), max(ys)))
    doc.axes(ax, "Testing time (ms)", "Training time (ms)")
    for position in sorted(contours_by_position):
        color = POSITION_COLORS.get(position, "#555555")
        shift = shifts_ms.get(position, 0.0)
        for threshold, polylines in contours_by_position[position]:
            dash = None if top is None or threshold >= top else "3 3"
            for k, poly in enumerate(polylines):
                doc.polyline(
                    [(ax.x(test_ms + shift), ax.y(train_ms)) for train_ms, test_ms in poly],
                    stroke=color, dash=dash,
                    elem_id=f"p{position}_t{threshold:g}_{k}",
                )
    for n, position in enumerate(sorted(contours_by_position)):
        doc.text(WIDTH - MARGIN_RIGHT - 60, MARGIN_TOP + 14 * (n + 1),
                 f"p{position}", fill=POSITION_COLORS.get(position, "#555555"))
    return doc.to_string()


def render_effects_svg(table, r_value: float, config_hash: str, seed: int) -> str:
    """Scatter of paired generalization effects with a least-squares line."""
    doc = _Svg("Generalization effects", config_hash, seed)
    xs = np.array([row[2] for row in table], dtype=np.float64)
    ys = np.array([row[3] for row in table], dtype=np.float64)
    if xs.size == 0:
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    pad_x = (xs.max() - xs.min()) * 0.08 + 1e-3
    pad_y = (ys.max() - ys.min()) * 0.08 + 1e-3
    ax = _Axes((xs.min() - pad_x, xs.max() + pad_x), (ys.min() - pad_y, ys.max() + pad_y))
    doc.axes(ax, "Effect (primary features)", "Effect (acoustic features)")
    if len(table) >= 2 and float(np.ptp(xs)) > 0:
        slope, intercept = np.polyfit(xs, ys, 1)
        x_line = np.array([ax.x0, ax.x1])
        doc.polyline(
            [(ax.x(x), ax.y(slope * x + intercept)) for x in x_line],
            stroke="#888888", dash="5 4", elem_id="fit_line",
        )
    for row in table:
        doc.circle(ax.x(row[2]), ax.y(row[3]), 4, "#1f77b4")
    if not math.isnan(r_value):
        doc.text(WIDTH - MARGIN_RIGHT - 8, MARGIN_TOP + 16, f"r = {r_value:.3f}", anchor="end")
    return doc.to_string()
