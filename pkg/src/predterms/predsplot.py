"""Layout of the predictions plot.

Every displayed term gets a vertical axis showing the distribution of its
centered contributions; a final axis shows the total.  All axes share the
left axis scale (centered linear prediction).  Layouts return a
:class:`~predterms.scene.PlotScene`; :func:`render_svg` turns any scene into
SVG text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ModelError
from .formula import TermKind
from .model import FittedModel, Link
from .render import render_svg
from .scene import Axis, Distribution, Glyph, Marker, PlotScene, Style, Tick
from .terms import CaseExplanation, Direction, PredictionTerms, order_terms

__all__ = [
    "DisplayStyle",
    "PROBABILITY_LABELS",
    "density_curve",
    "histogram_bins",
    "layout_case",
    "layout_overall",
    "layout_staircase",
    "nice_ticks",
    "render_svg",
]

PROBABILITY_LABELS = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DENSITY_POINTS = 512


@dataclass(frozen=True)
class DisplayStyle:
    """Options shared by all predictions-plot layouts.

    ``display`` selects histograms (``"hist"``) or density curves
    (``"density"``) for terms with many distinct values.  ``bandwidth``
    overrides the default kernel bandwidth and is in left-axis units.
    Terms with at most ``bars_threshold`` distinct contributions, and all
    categorical main effects, are drawn as bars.
    """

    display: str = "hist"
    bandwidth: float | None = None
    max_terms: int | None = None
    bars_threshold: int = 8
    full_total_axis: bool = False
    title: str = ""
    colors: Style = field(default_factory=Style)

    def __post_init__(self):
        if self.display not in ("hist", "density"):
            raise ValueError(f"display must be 'hist' or 'density', not {self.display!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")
        if self.bars_threshold < 1:
            raise ValueError("bars_threshold must be at least 1")


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


def histogram_bins(values, rule: str | int = "sturges") -> tuple[np.ndarray, np.ndarray]:
    """Equal-width bins over ``[min, max]``.

    ``rule`` is ``"sturges"`` (``ceil(log2 n) + 1`` bins) or an explicit bin
    count.  A column with a single distinct value gives one zero-width bin
    holding every observation.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("histogram of an empty sample")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return np.array([lo, hi]), np.array([x.size])
    if rule == "sturges":
        k = math.ceil(math.log2(x.size)) + 1
    elif isinstance(rule, (int, np.integer)) and rule >= 1:
        k = int(rule)
    else:
        raise ValueError(f"unknown bin rule {rule!r}")
    counts, edges = np.histogram(x, bins=k, range=(lo, hi))
    return edges, counts


def default_bandwidth(values) -> float:
    """Normal reference bandwidth ``0.9 min(sd, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(values, dtype=float).ravel()
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd  # heavy ties make the IQR vanish
    return 0.9 * spread * x.size ** -0.2


def density_curve(values, bandwidth: float | None = None, n_points: int = DENSITY_POINTS):
    """Gaussian kernel density estimate.

    Returns ``(grid, density, bandwidth)`` with ``n_points`` equispaced grid
    points over ``[min - 3h, max + 3h]``.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2 or x.min() == x.max():
        raise ValueError("density needs at least two distinct values")
    h = default_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, n_points)
    # chunk over the grid so large samples do not build an n x 512 matrix at once
    dens = np.empty(n_points)
    step = max(1, 2_000_000 // max(x.size, 1))
    for s in range(0, n_points, step):
        z = (grid[s:s + step, None] - x[None, :]) / h
        dens[s:s + step] = np.exp(-0.5 * z * z).sum(axis=1)
    dens /= x.size * h * math.sqrt(2 * math.pi)
    return grid, dens, h


def _distribution(values: np.ndarray, style: DisplayStyle, force_bars: bool = False) -> Distribution:
    uniq, counts = np.unique(values, return_counts=True)
    if force_bars or uniq.size <= style.bars_threshold:
        return Distribution(Glyph.BARS, uniq, counts.astype(float))
    if style.display == "density":
        grid, dens, _ = density_curve(values, style.bandwidth)
        return Distribution(Glyph.DENSITY, grid, dens)
    edges, hist = histogram_bins(values)
    return Distribution(Glyph.HISTOGRAM, edges, hist.astype(float))


# ---------------------------------------------------------------------------
# Ticks
# ---------------------------------------------------------------------------


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round-number tick values inside ``[lo, hi]`` with a 1-2-5 step."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw * (1 - 1e-12))
    k0 = math.ceil(lo / step - 1e-9)
    k1 = math.floor(hi / step + 1e-9)
    digits = max(0, 1 - math.floor(math.log10(step)))
    return [round(k * step, digits) for k in range(k0, k1 + 1)]


def _fmt(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


def _term_ticks(m: FittedModel, ds: Dataset, j: int, style: DisplayStyle) -> tuple[Tick, ...]:
    """Ticks in the term's own input units, placed on the left-axis scale."""
    tf = m.terms[j]
    term = tf.term
    center = float(m.term_centers[j])
    if term.kind is TermKind.MAIN_CATEGORICAL:
        levels = term.levels[0]
        by_level = {c.levels[0]: c.value for c in tf.coefs}
        return tuple(Tick(by_level.get(lv, 0.0) - center, lv) for lv in levels)
    numeric = [k for k in term.column_kinds if not k.is_factor]
    if len(numeric) != len(term.columns):
        return ()  # interactions with a factor have no single input scale
    raw = np.ones(ds.n_rows)
    for col in term.columns:
        raw = raw * np.asarray(ds[col].values, dtype=float)
    trans = term.transforms[0] if term.kind is TermKind.MAIN_NUMERIC else None
    slope = tf.coefs[0].value
    raw = raw[np.isfinite(raw)]
    if raw.size == 0:
        return ()
    uniq = np.unique(raw)
    if uniq.size <= style.bars_threshold:
        values = list(uniq)
    else:
        values = nice_ticks(float(uniq[0]), float(uniq[-1]))
    ticks = []
    for v in values:
        if trans == "log":
            if v <= 0:
                continue
            t = math.log(v)
        else:
            t = v
        ticks.append(Tick(slope * t - center, _fmt(v), float(v)))
    return tuple(ticks)


def _total_ticks(ylim: tuple[float, float], centercept: float, link: Link) -> tuple[Tick, ...]:
    lo, hi = ylim
    if link is Link.LOGIT:
        out = []
        for p in PROBABILITY_LABELS:
            pos = math.log(p) - math.log1p(-p) - centercept
            if lo <= pos <= hi:
                out.append(Tick(pos, _fmt(p), p))
        return tuple(out)
    return tuple(Tick(v - centercept, _fmt(v), v) for v in nice_ticks(lo + centercept, hi + centercept))


def _ylim(spans: list[tuple[float, float]]) -> tuple[float, float]:
    lo = min(s[0] for s in spans)
    hi = max(s[1] for s in spans)
    if hi == lo:
        pad = max(abs(lo), 1.0) * 0.5
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------


def _check_same_model(pt: PredictionTerms, ce: CaseExplanation):
    if tuple(pt.names) != tuple(ce.names) or pt.centercept != ce.centercept or pt.link is not ce.link:
        raise ModelError("case explanation and prediction terms come from different models")


def _color_of(value: float, colors: Style) -> str:
    if value > 0:
        return colors.above
    if value < 0:
        return colors.below
    return colors.zero


def _direction_color(d: Direction, colors: Style) -> str:
    return {Direction.UP: colors.up, Direction.DOWN: colors.down}.get(d, colors.neutral)


def _build(
    pt: PredictionTerms,
    style: DisplayStyle,
    model: FittedModel | None,
    data: Dataset | None,
    ce: CaseExplanation | None,
    staircase: bool,
    profile: bool,
) -> PlotScene:
    if pt.p < 1:
        raise ModelError("no prediction terms to display")
    if (model is None) != (data is None):
        raise ValueError("model and data must be given together")
    if model is not None and tuple(model.term_names) != tuple(pt.names):
        raise ModelError("model does not match the prediction terms")
    colors = style.colors
    shown = order_terms(pt, style.max_terms)
    kinds = [t.kind for t in model.model_terms] if model is not None else [None] * pt.p

    axes: list[Axis] = []
    spans: list[tuple[float, float]] = []
    running = [0.0]  # contributions in display order, summed exactly
    for j in shown:
        f = pt.F[:, j]
        dist = _distribution(f, style, force_bars=kinds[j] is TermKind.MAIN_CATEGORICAL)
        ticks = _term_ticks(model, data, j, style) if model is not None else ()
        offset = 0.0
        marker = None
        if ce is not None:
            v = float(ce.values[j])
            if staircase:
                offset = math.fsum(running)
                running.append(v)
                level = math.fsum(running)
            else:
                level = v
            marker = Marker(level, v, _color_of(v, colors))
            spans.append((level, level))
        color = colors.neutral if ce is not None else _direction_color(pt.directions[j], colors)
        lo, hi = dist.extent
        spans.append((lo + offset, hi + offset))
        axes.append(Axis(
            name=pt.names[j],
            dist=dist,
            color=color,
            direction=pt.directions[j] if ce is None else Direction.NONE,
            ticks=ticks,
            offset=offset,
            marker=marker,
            data_range=(float(f.min()), float(f.max())),
        ))

    total_dist = _distribution(pt.total, style)
    total_marker = None
    if ce is not None:
        total_marker = Marker(ce.sum, ce.sum, _color_of(ce.sum, colors))
        spans.append((ce.sum, ce.sum))
    if style.full_total_axis:
        spans.append(total_dist.extent)
    spans.append((0.0, 0.0))
    ylim = _ylim(spans)
    axes.append(Axis(
        name=f"total {pt.response}",
        dist=total_dist,
        color=colors.neutral,
        ticks=_total_ticks(ylim, pt.centercept, pt.link),
        marker=total_marker,
        is_total=True,
        data_range=(float(pt.total.min()), float(pt.total.max())),
    ))

    left = tuple(Tick(v, _fmt(v), v) for v in nice_ticks(*ylim))
    prof = None
    if ce is not None and profile:
        prof = tuple((i, a.marker.value) for i, a in enumerate(axes[:-1]))
    connectors = ()
    if ce is not None and staircase:
        connectors = tuple((i, a.marker.value) for i, a in enumerate(axes[:-1]))
    unit = "linear prediction" if pt.link is Link.LOGIT else pt.response
    return PlotScene(
        axes=tuple(axes),
        ylim=ylim,
        left_ticks=left,
        centercept=pt.centercept,
        link=pt.link,
        response=pt.response,
        style=colors,
        title=style.title,
        ylabel=f"prediction terms ({unit})",
        profile=prof,
        staircase=staircase,
        connectors=connectors,
        clip_total=not style.full_total_axis,
    )


def layout_overall(
    pt: PredictionTerms,
    style: DisplayStyle | None = None,
    *,
    model: FittedModel | None = None,
    data: Dataset | None = None,
) -> PlotScene:
    """Predictions plot of all training cases.

    Term axes run left to right by decreasing stdev and are colored by the
    direction of the effect.  ``model`` and ``data`` (the training data that
    ``pt`` was computed on) are needed for tick labels in input units.
    """
    return _build(pt, style or DisplayStyle(), model, data, None, False, False)


def layout_case(
    pt: PredictionTerms,
    ce: CaseExplanation,
    style: DisplayStyle | None = None,
    profile: bool = False,
    *,
    model: FittedModel | None = None,
    data: Dataset | None = None,
) -> PlotScene:
    """Predictions plot highlighting one case.

    Distributions are grey; each term gets a marker at the case's
    contribution, red above the term average and blue below.
    """
    _check_same_model(pt, ce)
    return _build(pt, style or DisplayStyle(), model, data, ce, False, profile)


def layout_staircase(
    pt: PredictionTerms,
    ce: CaseExplanation,
    style: DisplayStyle | None = None,
    profile: bool = False,
    *,
    model: FittedModel | None = None,
    data: Dataset | None = None,
) -> PlotScene:
    """Case plot with each axis shifted to the running sum of the contributions
    displayed to its left, so the last marker lands on the case's SUM."""
    _check_same_model(pt, ce)
    return _build(pt, style or DisplayStyle(), model, data, ce, True, profile)
