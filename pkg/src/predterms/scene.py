"""Resolution-independent scene descriptions shared by layout and rendering.

All vertical positions in a :class:`PlotScene` are in units of the centered
linear prediction (the left axis).  Staircase offsets are stored separately
from the distributions they shift.  :class:`PredscorScene` geometry lives in
the unit square.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .model import Link
from .terms import Direction


@dataclass(frozen=True)
class Style:
    up: str = "#2E8B57"
    down: str = "#8B5A2B"
    neutral: str = "#9B9B9B"
    above: str = "#D33"
    below: str = "#36C"
    zero: str = "#9B9B9B"
    axis: str = "#000000"
    text: str = "#222222"
    profile: str = "#B0B0B0"
    connector: str = "#808080"
    diagonal: str = "#000000"
    positive: str = "#FF0000"
    negative: str = "#0000FF"
    background: str = "#FFFFFF"
    line_width: float = 1.0
    axis_width: float = 1.2
    marker_radius: float = 5.0
    glyph_opacity: float = 0.85
    font_size: float = 11.0
    title_size: float = 14.0
    font_family: str = "Helvetica, Arial, sans-serif"
    min_cell_px: float = 2.0

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, object] | None) -> Style:
        if not overrides:
            return cls()
        known = {f.name: f.type for f in fields(cls)}
        bad = sorted(set(overrides) - set(known))
        if bad:
            raise ValueError(f"unknown style key(s): {', '.join(bad)}")
        base = cls()
        vals = {}
        for k, v in overrides.items():
            vals[k] = float(v) if isinstance(getattr(base, k), float) else str(v)
        return replace(base, **vals)

    @classmethod
    def from_json(cls, text: str) -> Style:
        return cls.from_mapping(json.loads(text))

    def to_dict(self) -> dict:
        return asdict(self)


class Glyph(str, enum.Enum):
    HISTOGRAM = "histogram"
    BARS = "bars"
    DENSITY = "density"


@dataclass(frozen=True)
class Distribution:
    """One axis' distribution.

    HISTOGRAM: ``positions`` are bin edges (m+1), ``heights`` counts (m).
    BARS: ``positions`` are the distinct values, ``heights`` their counts.
    DENSITY: ``positions`` is the evaluation grid, ``heights`` the density.
    """

    glyph: Glyph
    positions: np.ndarray
    heights: np.ndarray

    @property
    def extent(self) -> tuple[float, float]:
        if self.glyph is Glyph.DENSITY:
            # the curve tails are not data; use the support where it is visible
            h = self.heights
            keep = h >= h.max() * 1e-3 if h.size else h
            pos = self.positions[keep] if h.size else self.positions
            return float(pos.min()), float(pos.max())
        return float(self.positions.min()), float(self.positions.max())


@dataclass(frozen=True)
class Tick:
    position: float  # left-axis units, before any staircase offset
    label: str
    value: float | None = None


@dataclass(frozen=True)
class Marker:
    value: float  # left-axis units, offset included
    contribution: float
    color: str


@dataclass(frozen=True)
class Axis:
    name: str
    dist: Distribution
    color: str
    direction: Direction = Direction.NONE
    ticks: tuple[Tick, ...] = ()
    offset: float = 0.0
    marker: Marker | None = None
    is_total: bool = False
    data_range: tuple[float, float] | None = None  # min/max of the plotted values


@dataclass(frozen=True)
class PlotScene:
    axes: tuple[Axis, ...]  # term axes in display order, then the total axis
    ylim: tuple[float, float]
    left_ticks: tuple[Tick, ...]
    centercept: float
    link: Link
    response: str
    style: Style = Style()
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    profile: tuple[tuple[int, float], ...] | None = None
    staircase: bool = False
    connectors: tuple[tuple[int, float], ...] = ()  # (from axis, level) to the next axis
    clip_total: bool = True

    @property
    def term_axes(self) -> tuple[Axis, ...]:
        return tuple(a for a in self.axes if not a.is_total)

    @property
    def total_axis(self) -> Axis | None:
        for a in self.axes:
            if a.is_total:
                return a
        return None


@dataclass(frozen=True)
class Cell:
    row: int
    col: int
    x: float
    y: float
    width: float
    height: float
    correlation: float
    color: str

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class PredscorScene:
    names: tuple[str, ...]
    sides: np.ndarray  # unit-square side length per term, sums to 1
    cells: tuple[Cell, ...]
    style: Style = Style()
    title: str = ""
    classic: bool = False
    absolute: bool = False
    cell_area: str = "variance"

    def cell(self, i: int, j: int) -> Cell:
        return self.cells[i * len(self.names) + j]


def _rgb(color: str) -> tuple[int, int, int]:
    h = color.lstrip("#")
    if len(h) == 3:
        h = "".join(ch * 2 for ch in h)
    if len(h) != 6:
        raise ValueError(f"not a hex color: {color!r}")
    return int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16)


def diverging_color(value: float, positive: str = "#FF0000", negative: str = "#0000FF") -> str:
    """White at 0, blending linearly to ``positive`` at +1 and ``negative`` at -1."""
    v = min(1.0, max(-1.0, float(value)))
    target = _rgb(positive if v >= 0 else negative)
    a = abs(v)
    rgb = (round(255 + (t - 255) * a) for t in target)
    return "#" + "".join(f"{c:02X}" for c in rgb)
