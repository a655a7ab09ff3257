"""Deterministic SVG output for plot scenes.

Coordinates are written with two decimals and elements are emitted in scene
order, so equal scenes give byte-identical documents.  Elements carry
``class`` and ``data-*`` attributes that name what they show.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import RenderError
from .scene import Axis, Glyph, PlotScene, PredscorScene, diverging_color
from .terms import Direction

Margins = tuple[float, float, float, float]  # top, right, bottom, left

AXIS_SLOT = 100.0
GLYPH_FRACTION = 0.6
BAR_PX = 4.0


def _n(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass(frozen=True)
class Frame:
    """Pixel mapping of a predictions plot."""

    width: float
    height: float
    margins: Margins
    ylim: tuple[float, float]
    n_axes: int

    @property
    def plot_top(self) -> float:
        return self.margins[0]

    @property
    def plot_bottom(self) -> float:
        return self.height - self.margins[2]

    @property
    def plot_left(self) -> float:
        return self.margins[3]

    @property
    def plot_right(self) -> float:
        return self.width - self.margins[1]

    @property
    def slot(self) -> float:
        return (self.plot_right - self.plot_left) / self.n_axes

    def y(self, value: float) -> float:
        lo, hi = self.ylim
        return self.plot_top + (hi - value) * (self.plot_bottom - self.plot_top) / (hi - lo)

    def axis_x(self, i: int) -> float:
        return self.plot_left + self.slot * (i + 0.2)


def plot_frame(scene: PlotScene, width: float | None = None, height: float | None = None,
               margins: Margins | None = None) -> Frame:
    n = len(scene.axes)
    if n == 0:
        raise RenderError("scene has no axes")
    if margins is None:
        margins = (48.0 if scene.title else 24.0, 60.0, 64.0, 72.0)
    if width is None:
        width = max(360.0, margins[1] + margins[3] + AXIS_SLOT * n)
    if height is None:
        height = 440.0
    if not (width > 0 and height > 0) or any(m < 0 for m in margins):
        raise RenderError("width and height must be positive and margins non-negative")
    if width - margins[1] - margins[3] <= 0 or height - margins[0] - margins[2] <= 0:
        raise RenderError("margins leave no room for the plot")
    lo, hi = scene.ylim
    if not hi > lo:
        raise RenderError("empty vertical range")
    return Frame(float(width), float(height), tuple(float(m) for m in margins), scene.ylim, n)


def render_svg(scene: PlotScene | PredscorScene, width: float | None = None,
               height: float | None = None, margins: Margins | None = None) -> str:
    """Render a predictions-plot or predscor scene to an SVG document."""
    if isinstance(scene, PredscorScene):
        return _render_predscor(scene, width, height, margins)
    if not isinstance(scene, PlotScene):
        raise RenderError(f"cannot render {type(scene).__name__}")
    return _render_plot(scene, plot_frame(scene, width, height, margins))


def _header(width: float, height: float, scene) -> list[str]:
    st = scene.style
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}" font-family={quoteattr(st.font_family)} '
        f'font-size="{_n(st.font_size)}">',
        f'<rect class="background" x="0" y="0" width="{_n(width)}" height="{_n(height)}" fill="{st.background}"/>',
    ]


def _title(out: list[str], scene, width: float):
    if scene.title:
        st = scene.style
        out.append(
            f'<text class="title" x="{_n(width / 2)}" y="{_n(st.title_size + 8)}" text-anchor="middle" '
            f'font-size="{_n(st.title_size)}" fill="{st.text}">{escape(scene.title)}</text>'
        )


def _render_plot(scene: PlotScene, fr: Frame) -> str:
    st = scene.style
    out = _header(fr.width, fr.height, scene)
    out.append(
        f'<defs><clipPath id="plot-area"><rect x="{_n(fr.plot_left)}" y="{_n(fr.plot_top)}" '
        f'width="{_n(fr.plot_right - fr.plot_left)}" height="{_n(fr.plot_bottom - fr.plot_top)}"/>'
        f'</clipPath></defs>'
    )
    _title(out, scene, fr.width)

    # left axis
    x0 = fr.plot_left - 8
    out.append(f'<g class="left-axis" stroke="{st.axis}" stroke-width="{_n(st.axis_width)}">')
    out.append(f'<line x1="{_n(x0)}" y1="{_n(fr.plot_top)}" x2="{_n(x0)}" y2="{_n(fr.plot_bottom)}"/>')
    for t in scene.left_ticks:
        y = fr.y(t.position)
        out.append(f'<line class="left-tick" data-value={quoteattr(repr(t.position))} '
                   f'x1="{_n(x0 - 4)}" y1="{_n(y)}" x2="{_n(x0)}" y2="{_n(y)}"/>')
    out.append("</g>")
    for t in scene.left_ticks:
        out.append(f'<text class="left-label" x="{_n(x0 - 6)}" y="{_n(fr.y(t.position) + 4)}" '
                   f'text-anchor="end" fill="{st.text}">{escape(t.label)}</text>')
    if scene.ylabel:
        yc = (fr.plot_top + fr.plot_bottom) / 2
        out.append(f'<text class="ylabel" x="16" y="{_n(yc)}" text-anchor="middle" fill="{st.text}" '
                   f'transform="rotate(-90 16 {_n(yc)})">{escape(scene.ylabel)}</text>')

    for i, axis in enumerate(scene.axes):
        _axis(out, scene, fr, i, axis)

    if scene.connectors:
        out.append(f'<g class="connectors" stroke="{st.connector}" stroke-width="{_n(st.line_width)}" '
                   f'stroke-dasharray="2 2">')
        for i, level in scene.connectors:
            y = fr.y(level)
            out.append(f'<line x1="{_n(fr.axis_x(i))}" y1="{_n(y)}" x2="{_n(fr.axis_x(i + 1))}" y2="{_n(y)}"/>')
        out.append("</g>")
    if scene.profile:
        pts = " ".join(f"{_n(fr.axis_x(i))},{_n(fr.y(v))}" for i, v in scene.profile)
        out.append(f'<polyline class="profile" points="{pts}" fill="none" stroke="{st.profile}" '
                   f'stroke-width="{_n(st.line_width)}" stroke-dasharray="5 3"/>')
    for i, axis in enumerate(scene.axes):
        if axis.marker is not None:
            mk = axis.marker
            out.append(
                f'<circle class="marker" data-term={quoteattr(axis.name)} data-value={quoteattr(repr(mk.value))} '
                f'cx="{_n(fr.axis_x(i))}" cy="{_n(fr.y(mk.value))}" r="{_n(st.marker_radius)}" '
                f'fill="{mk.color}" stroke="{st.axis}" stroke-width="0.5"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _glyph(out: list[str], fr: Frame, x: float, axis: Axis, opacity: float):
    d = axis.dist
    off = axis.offset
    peak = float(d.heights.max()) if d.heights.size else 0.0
    gw = fr.slot * GLYPH_FRACTION
    scale = gw / peak if peak > 0 else 0.0
    fill = f'fill="{axis.color}" fill-opacity="{_n(opacity)}"'
    if d.glyph is Glyph.HISTOGRAM:
        for lo, hi, c in zip(d.positions[:-1], d.positions[1:], d.heights):
            y_top, y_bot = fr.y(hi + off), fr.y(lo + off)
            out.append(f'<rect x="{_n(x)}" y="{_n(y_top)}" width="{_n(c * scale)}" '
                       f'height="{_n(max(y_bot - y_top, 0.0))}" {fill} stroke="#FFFFFF" stroke-width="0.3"/>')
    elif d.glyph is Glyph.BARS:
        for v, c in zip(d.positions, d.heights):
            y = fr.y(v + off)
            out.append(f'<rect x="{_n(x)}" y="{_n(y - BAR_PX / 2)}" width="{_n(c * scale)}" '
                       f'height="{_n(BAR_PX)}" {fill}/>')
    else:
        pts = [f"{_n(x)},{_n(fr.y(d.positions[0] + off))}"]
        pts += [f"{_n(x + h * scale)},{_n(fr.y(p + off))}" for p, h in zip(d.positions, d.heights)]
        pts.append(f"{_n(x)},{_n(fr.y(d.positions[-1] + off))}")
        out.append(f'<polygon points="{" ".join(pts)}" {fill}/>')


def _axis(out: list[str], scene: PlotScene, fr: Frame, i: int, axis: Axis):
    st = scene.style
    x = fr.axis_x(i)
    cls = "total-axis" if axis.is_total else "term-axis"
    out.append(f'<g class="{cls}" data-term={quoteattr(axis.name)} data-index="{i}" '
               f'data-offset={quoteattr(repr(axis.offset))}>')
    clip = axis.is_total and scene.clip_total or scene.staircase
    out.append('<g class="glyph" clip-path="url(#plot-area)">' if clip else '<g class="glyph">')
    _glyph(out, fr, x, axis, st.glyph_opacity)
    out.append("</g>")

    lo, hi = axis.dist.extent
    if axis.data_range is not None:
        lo, hi = min(lo, axis.data_range[0]), max(hi, axis.data_range[1])
    tick_pos = [t.position for t in axis.ticks]
    if tick_pos and not axis.is_total:
        lo, hi = min(lo, *tick_pos), max(hi, *tick_pos)
    if axis.is_total:
        lo, hi = fr.ylim
    y1 = max(fr.y(hi + axis.offset), fr.plot_top)
    y2 = min(fr.y(lo + axis.offset), fr.plot_bottom)
    out.append(f'<line class="axis-line" x1="{_n(x)}" y1="{_n(y1)}" x2="{_n(x)}" y2="{_n(y2)}" '
               f'stroke="{st.axis}" stroke-width="{_n(st.axis_width)}"/>')

    tick_cls = "total-tick" if axis.is_total else "term-tick"
    side = 1 if axis.is_total else -1
    anchor = "start" if axis.is_total else "end"
    for t in axis.ticks:
        y = fr.y(t.position + axis.offset)
        if not fr.plot_top - 0.5 <= y <= fr.plot_bottom + 0.5:
            continue
        value = repr(t.value) if t.value is not None else t.label
        out.append(f'<line class="{tick_cls}" data-value={quoteattr(value)} x1="{_n(x)}" y1="{_n(y)}" '
                   f'x2="{_n(x + 4 * side)}" y2="{_n(y)}" stroke="{st.axis}" stroke-width="{_n(st.line_width)}"/>')
        out.append(f'<text class="{tick_cls}-label" x="{_n(x + 6 * side)}" y="{_n(y + 3.5)}" '
                   f'text-anchor="{anchor}" font-size="{_n(st.font_size * 0.85)}" '
                   f'fill="{st.text}">{escape(t.label)}</text>')

    label_y = fr.plot_bottom + 18
    out.append(f'<text class="axis-name" x="{_n(x)}" y="{_n(label_y)}" text-anchor="middle" '
               f'fill="{st.text}">{escape(axis.name)}</text>')
    if axis.direction is not Direction.NONE:
        ay = label_y + 16
        if axis.direction is Direction.UP:
            path = f"M{_n(x - 5)},{_n(ay)} L{_n(x + 5)},{_n(ay)} L{_n(x)},{_n(ay - 9)} Z"
        else:
            path = f"M{_n(x - 5)},{_n(ay - 9)} L{_n(x + 5)},{_n(ay - 9)} L{_n(x)},{_n(ay)} Z"
        out.append(f'<path class="arrow" data-direction="{axis.direction.value}" d="{path}" fill="{axis.color}"/>')
    out.append("</g>")


def _render_predscor(scene: PredscorScene, width, height, margins) -> str:
    if not scene.names:
        raise RenderError("scene has no terms")
    if margins is None:
        longest = max(len(s) for s in scene.names)
        lab = min(40.0 + 6.5 * longest, 220.0)
        margins = (lab, 90.0, 24.0, lab)
    if width is None:
        width = margins[1] + margins[3] + 400.0
    if height is None:
        height = margins[0] + margins[2] + 400.0
    if not (width > 0 and height > 0) or any(m < 0 for m in margins):
        raise RenderError("width and height must be positive and margins non-negative")
    pw = width - margins[1] - margins[3]
    ph = height - margins[0] - margins[2]
    if pw <= 0 or ph <= 0:
        raise RenderError("margins leave no room for the plot")
    st = scene.style
    size = min(pw, ph)
    ox, oy = margins[3], margins[0]
    out = _header(width, height, scene)
    _title(out, scene, width)

    out.append('<g class="cells">')
    for c in scene.cells:
        w = max(c.width * size, st.min_cell_px)
        h = max(c.height * size, st.min_cell_px)
        cls = "cell diagonal" if c.row == c.col else "cell"
        out.append(
            f'<rect class="{cls}" data-row="{c.row}" data-col="{c.col}" '
            f'data-cor={quoteattr(repr(c.correlation))} x="{_n(ox + c.x * size)}" y="{_n(oy + c.y * size)}" '
            f'width="{_n(w)}" height="{_n(h)}" fill="{c.color}" stroke="#DDDDDD" stroke-width="0.5"/>'
        )
    out.append("</g>")

    for i, name in enumerate(scene.names):
        d = scene.cell(i, i)
        yc = oy + (d.y + d.height / 2) * size
        xc = ox + (d.x + d.width / 2) * size
        out.append(f'<text class="row-label" x="{_n(ox - 6)}" y="{_n(yc + 4)}" text-anchor="end" '
                   f'fill="{st.text}">{escape(name)}</text>')
        out.append(f'<text class="col-label" x="{_n(xc)}" y="{_n(oy - 6)}" text-anchor="start" '
                   f'fill="{st.text}" transform="rotate(-45 {_n(xc)} {_n(oy - 6)})">{escape(name)}</text>')

    # color key
    kx = ox + size + 24
    steps = np.linspace(1.0, 0.0 if scene.absolute else -1.0, 11)
    kh = min(size, 220.0) / len(steps)
    out.append('<g class="legend">')
    for k, v in enumerate(steps):
        col = diverging_color(float(v), st.positive, st.negative)
        y = oy + k * kh
        out.append(f'<rect x="{_n(kx)}" y="{_n(y)}" width="14" height="{_n(kh)}" fill="{col}" '
                   f'stroke="#DDDDDD" stroke-width="0.5"/>')
        if k % 5 == 0:
            out.append(f'<text x="{_n(kx + 18)}" y="{_n(y + kh / 2 + 4)}" fill="{st.text}">{_n(float(v))}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
