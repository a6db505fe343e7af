"""Self-contained SVG line plots built directly on ElementTree.

Canonical styling matches the plotting vocabulary used throughout the
package: faint yellow replicate traces, solid red empirical mean, dashed
blue closed-form overlay, dashed red bound overlay.  Panels compose into
a grid inside a single document; every document embeds the resolved
config hash in a <metadata> element and references no external assets.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Style",
    "Series",
    "Panel",
    "TRACE",
    "MEAN",
    "FORMULA",
    "BOUND",
    "panel_element",
    "simplex_element",
    "compose",
]

PANEL_W = 380
PANEL_H = 280
_ML, _MR, _MT, _MB = 58, 14, 30, 42
_FONT = "DejaVu Sans, Helvetica, sans-serif"


@dataclass(frozen=True)
class Style:
    stroke: str
    width: float = 1.5
    dash: Optional[str] = None
    opacity: float = 1.0


TRACE = Style(stroke="#e6c229", width=1.0, opacity=0.35)
MEAN = Style(stroke="#d62728", width=2.0)
FORMULA = Style(stroke="#1f77b4", width=1.8, dash="7,4")
BOUND = Style(stroke="#d62728", width=1.6, dash="5,4")


@dataclass(frozen=True)
class Series:
    """One drawable: kind is 'line', 'cross' (scatter) or 'bar'."""

    x: np.ndarray
    y: np.ndarray
    style: Style
    label: Optional[str] = None
    kind: str = "line"


@dataclass(frozen=True)
class Panel:
    series: tuple
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    x_scale: str = "linear"
    y_scale: str = "linear"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw_step = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if (hi - lo) / step <= target + 1:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    decades = [10.0**e for e in range(lo_e, hi_e + 1) if lo / 10 <= 10.0**e <= hi * 10]
    if len(decades) >= 2:
        return [d for d in decades if lo * (1 - 1e-12) <= d <= hi * (1 + 1e-12)] or decades
    return [10.0**v for v in _nice_ticks(math.log10(lo), math.log10(hi))]


def _fmt_tick(value: float) -> str:
    if value != 0 and (abs(value) >= 1e4 or abs(value) < 1e-3):
        exp = math.floor(math.log10(abs(value)))
        mant = value / 10.0**exp
        if abs(mant - 1.0) < 1e-9:
            return f"1e{exp}"
        return f"{mant:g}e{exp}"
    return f"{value:g}"


class _Axis:
    """Maps data coordinates to panel pixels on a linear or log scale."""

    def __init__(self, lo, hi, px_lo, px_hi, scale):
        self.scale = scale
        if scale == "log":
            lo = max(lo, 1e-300)
            hi = max(hi, lo)
            self.lo, self.hi = math.log10(lo), math.log10(hi)
        else:
            self.lo, self.hi = lo, hi
        if self.hi <= self.lo:
            pad = 1.0 if self.lo == 0 else abs(self.lo) * 0.5 + 1e-12
            self.lo, self.hi = self.lo - pad, self.hi + pad
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, value):
        v = np.log10(value) if self.scale == "log" else value
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)

    def data_range(self):
        if self.scale == "log":
            return 10.0**self.lo, 10.0**self.hi
        return self.lo, self.hi


def _finite_mask(series: Series) -> np.ndarray:
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    return np.isfinite(x) & np.isfinite(y)


def _data_limits(panel: Panel):
    xs_lo, xs_hi, ys_lo, ys_hi = [], [], [], []
    for series in panel.series:
        x = np.asarray(series.x, dtype=float)
        y = np.asarray(series.y, dtype=float)
        mask = np.isfinite(x) & np.isfinite(y)
        if panel.x_scale == "log":
            mask &= x > 0
        if panel.y_scale == "log":
            mask &= y > 0
        if not mask.any():
            continue
        xs_lo.append(x[mask].min())
        xs_hi.append(x[mask].max())
        ys_lo.append(y[mask].min())
        ys_hi.append(y[mask].max())
    if not xs_lo:
        return 0.0, 1.0, 0.0, 1.0
    x_lo, x_hi = min(xs_lo), max(xs_hi)
    y_lo, y_hi = min(ys_lo), max(ys_hi)
    if panel.y_scale == "linear":
        span = y_hi - y_lo
        pad = 0.05 * (span if span > 0 else max(abs(y_hi), 1.0))
        y_lo, y_hi = y_lo - pad, y_hi + pad
        if y_lo > 0 and y_lo < 0.3 * y_hi:
            y_lo = 0.0
    return x_lo, x_hi, y_lo, y_hi


def _stroke_attrs(style: Style) -> dict:
    attrs = {
        "fill": "none",
        "stroke": style.stroke,
        "stroke-width": f"{style.width:g}",
    }
    if style.dash:
        attrs["stroke-dasharray"] = style.dash
    if style.opacity != 1.0:
        attrs["stroke-opacity"] = f"{style.opacity:g}"
    return attrs


def _polylines(group, series, ax, ay):
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    ok = _finite_mask(series)
    if ax.scale == "log":
        ok &= x > 0
    if ay.scale == "log":
        ok &= y > 0
    attrs = _stroke_attrs(series.style)
    run = []
    for i in range(x.size):
        if ok[i]:
            run.append(f"{ax(x[i]):.1f},{ay(y[i]):.1f}")
        elif run:
            _flush_polyline(group, run, attrs)
            run = []
    _flush_polyline(group, run, attrs)


def _flush_polyline(group, run, attrs):
    if len(run) >= 2:
        ET.SubElement(group, "polyline", {**attrs, "points": " ".join(run)})
    elif len(run) == 1:
        px, py = run[0].split(",")
        ET.SubElement(
            group,
            "circle",
            {
                "cx": px,
                "cy": py,
                "r": "1.6",
                "fill": attrs["stroke"],
                "stroke": "none",
            },
        )


def _crosses(group, series, ax, ay, arm=3.4):
    ok = _finite_mask(series)
    attrs = _stroke_attrs(series.style)
    for xv, yv in zip(np.asarray(series.x)[ok], np.asarray(series.y)[ok]):
        px, py = ax(float(xv)), ay(float(yv))
        d = (
            f"M {px - arm:.1f} {py - arm:.1f} L {px + arm:.1f} {py + arm:.1f} "
            f"M {px - arm:.1f} {py + arm:.1f} L {px + arm:.1f} {py - arm:.1f}"
        )
        ET.SubElement(group, "path", {**attrs, "d": d})


def _bars(group, series, ax, ay):
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    ok = _finite_mask(series)
    step = np.min(np.diff(np.unique(x[ok]))) if ok.sum() > 1 else 1.0
    half = 0.45 * step
    base = ay(max(0.0, ay.data_range()[0]))
    for xv, yv in zip(x[ok], y[ok]):
        if yv <= 0:
            continue
        x0, x1 = ax(xv - half), ax(xv + half)
        y1 = ay(yv)
        ET.SubElement(
            group,
            "rect",
            {
                "x": f"{min(x0, x1):.1f}",
                "y": f"{min(y1, base):.1f}",
                "width": f"{abs(x1 - x0):.1f}",
                "height": f"{abs(base - y1):.1f}",
                "fill": series.style.stroke,
                "fill-opacity": f"{series.style.opacity:g}",
                "stroke": "none",
            },
        )


def _text(group, x, y, content, size=11, anchor="middle", extra=None):
    attrs = {
        "x": f"{x:.1f}",
        "y": f"{y:.1f}",
        "font-family": _FONT,
        "font-size": str(size),
        "text-anchor": anchor,
        "fill": "#222222",
    }
    if extra:
        attrs.update(extra)
    el = ET.SubElement(group, "text", attrs)
    el.text = content
    return el


def panel_element(panel: Panel) -> ET.Element:
    """Render one panel into a <g> of size PANEL_W x PANEL_H at (0, 0)."""
    group = ET.Element("g")
    x_lo, x_hi, y_lo, y_hi = _data_limits(panel)
    ax = _Axis(x_lo, x_hi, _ML, PANEL_W - _MR, panel.x_scale)
    ay = _Axis(y_lo, y_hi, PANEL_H - _MB, _MT, panel.y_scale)

    plot_w = PANEL_W - _ML - _MR
    plot_h = PANEL_H - _MT - _MB
    ET.SubElement(
        group,
        "rect",
        {
            "x": str(_ML),
            "y": str(_MT),
            "width": str(plot_w),
            "height": str(plot_h),
            "fill": "#ffffff",
            "stroke": "#444444",
            "stroke-width": "1",
        },
    )

    x_ticks = (
        _log_ticks(*ax.data_range()) if panel.x_scale == "log" else _nice_ticks(x_lo, x_hi)
    )
    y_ticks = (
        _log_ticks(*ay.data_range()) if panel.y_scale == "log" else _nice_ticks(y_lo, y_hi)
    )
    d_lo, d_hi = ax.data_range()
    for t in x_ticks:
        if not (d_lo - 1e-12 <= t <= d_hi + 1e-12):
            continue
        px = ax(t)
        ET.SubElement(
            group,
            "line",
            {
                "x1": f"{px:.1f}",
                "y1": str(PANEL_H - _MB),
                "x2": f"{px:.1f}",
                "y2": str(PANEL_H - _MB + 4),
                "stroke": "#444444",
                "stroke-width": "1",
            },
        )
        _text(group, px, PANEL_H - _MB + 16, _fmt_tick(t), size=10)
    d_lo, d_hi = ay.data_range()
    for t in y_ticks:
        if not (d_lo - 1e-12 <= t <= d_hi + 1e-12):
            continue
        py = ay(t)
        ET.SubElement(
            group,
            "line",
            {
                "x1": str(_ML - 4),
                "y1": f"{py:.1f}",
                "x2": str(_ML),
                "y2": f"{py:.1f}",
                "stroke": "#444444",
                "stroke-width": "1",
            },
        )
        _text(group, _ML - 7, py + 3.5, _fmt_tick(t), size=10, anchor="end")

    clip = ET.SubElement(group, "g")
    for series in panel.series:
        if series.kind == "bar":
            _bars(clip, series, ax, ay)
        elif series.kind == "cross":
            _crosses(clip, series, ax, ay)
        else:
            _polylines(clip, series, ax, ay)

    if panel.title:
        _text(group, PANEL_W / 2, _MT - 10, panel.title, size=12)
    if panel.x_label:
        _text(group, _ML + plot_w / 2, PANEL_H - 8, panel.x_label, size=11)
    if panel.y_label:
        mid_y = _MT + plot_h / 2
        _text(
            group,
            14,
            mid_y,
            panel.y_label,
            size=11,
            extra={"transform": f"rotate(-90 14 {mid_y:.1f})"},
        )

    labeled = []
    seen = set()
    for series in panel.series:
        if series.label and series.label not in seen:
            labeled.append(series)
            seen.add(series.label)
    for i, series in enumerate(labeled):
        ly = _MT + 12 + 14 * i
        lx = PANEL_W - _MR - 108
        ET.SubElement(
            group,
            "line",
            {
                "x1": str(lx),
                "y1": f"{ly - 3.5:.1f}",
                "x2": str(lx + 22),
                "y2": f"{ly - 3.5:.1f}",
                **{
                    k: v
                    for k, v in _stroke_attrs(series.style).items()
                    if k != "fill"
                },
            },
        )
        _text(group, lx + 27, ly, series.label, size=10, anchor="start")
    return group


def simplex_element(
    trajectories: Sequence[np.ndarray],
    title: str = "",
    colors: Optional[Sequence[str]] = None,
) -> ET.Element:
    """Trajectories over a 3-token simplex drawn as a triangle.

    Each trajectory is an (M, 3) array of probability rows; barycentric
    coordinates map to the plane via x = p1 + p2/2, y = (sqrt(3)/2) p2.
    """
    palette = colors or (
        "#1f77b4",
        "#d62728",
        "#2ca02c",
        "#9467bd",
        "#ff7f0e",
        "#8c564b",
        "#e377c2",
        "#17becf",
    )
    group = ET.Element("g")
    side = PANEL_W - _ML - _MR
    height = side * math.sqrt(3) / 2
    ox, oy = _ML, PANEL_H - _MB

    def to_px(p):
        bx = p[1] + p[2] / 2.0
        by = p[2] * math.sqrt(3) / 2.0
        return ox + bx * side, oy - by / (math.sqrt(3) / 2) * height

    corners = [
        to_px((1.0, 0.0, 0.0)),
        to_px((0.0, 1.0, 0.0)),
        to_px((0.0, 0.0, 1.0)),
    ]
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in corners)
    ET.SubElement(
        group,
        "polygon",
        {"points": pts, "fill": "none", "stroke": "#444444", "stroke-width": "1.2"},
    )
    for (cx, cy), name in zip(corners, ("token 0", "token 1", "token 2")):
        _text(group, cx, cy + (14 if cy > PANEL_H / 2 else -6), name, size=10)

    for i, traj in enumerate(trajectories):
        arr = np.asarray(traj, dtype=float)
        color = palette[i % len(palette)]
        run = [f"{x:.1f},{y:.1f}" for x, y in (to_px(row) for row in arr)]
        if len(run) >= 2:
            ET.SubElement(
                group,
                "polyline",
                {
                    "points": " ".join(run),
                    "fill": "none",
                    "stroke": color,
                    "stroke-width": "1.1",
                    "stroke-opacity": "0.8",
                },
            )
        sx, sy = to_px(arr[0])
        ET.SubElement(
            group,
            "circle",
            {"cx": f"{sx:.1f}", "cy": f"{sy:.1f}", "r": "2.6", "fill": color},
        )
    if title:
        _text(group, PANEL_W / 2, _MT - 10, title, size=12)
    return group


def compose(
    panels: Sequence[ET.Element],
    cols: int,
    cfg_hash: str,
    description: str = "",
) -> bytes:
    """Arrange panel groups in a grid and serialize the full document."""
    count = len(panels)
    cols = max(1, min(cols, count))
    rows = (count + cols - 1) // cols
    width = cols * PANEL_W
    height = rows * PANEL_H
    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )
    meta = ET.SubElement(root, "metadata")
    meta.text = f"config_hash={cfg_hash}"
    if description:
        desc = ET.SubElement(root, "desc")
        desc.text = description
    ET.SubElement(
        root,
        "rect",
        {"x": "0", "y": "0", "width": str(width), "height": str(height), "fill": "#ffffff"},
    )
    for i, panel in enumerate(panels):
        r, c = divmod(i, cols)
        panel.set("transform", f"translate({c * PANEL_W} {r * PANEL_H})")
        root.append(panel)
    doc = ET.tostring(root, encoding="unicode")
    return ('<?xml version="1.0" encoding="UTF-8"?>\n' + doc + "\n").encode("utf-8")
