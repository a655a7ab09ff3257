"""Covariance structure of prediction terms and its cell display.

Each term gets a row and a column whose thickness grows with the term's
standard deviation, so an off-diagonal cell's area is proportional to
``sd_i * sd_j`` and its color shows the correlation.  Together they show
the covariance between the two terms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .scene import Cell, PredscorScene, Style, diverging_color
from .terms import PredictionTerms, order_terms

CELL_AREAS = ("variance", "stdev")


@dataclass(frozen=True)
class TermCovariance:
    cov: np.ndarray
    cor: np.ndarray
    stdevs: np.ndarray
    names: tuple[str, ...]
    excluded: tuple[str, ...] = ()

    @property
    def p(self) -> int:
        return len(self.names)


def term_covariance(pt: PredictionTerms) -> TermCovariance:
    """Sample covariance (n-1 denominator) and correlation of the term columns.

    Terms with zero spread have no correlation and are dropped with a
    warning.
    """
    keep = [j for j in range(pt.p) if pt.stdevs[j] > 0]
    dropped = tuple(pt.names[j] for j in range(pt.p) if j not in keep)
    if dropped:
        warnings.warn(f"constant prediction terms left out: {', '.join(dropped)}", stacklevel=2)
    if len(keep) < 2:
        raise ModelError("need at least two non-constant prediction terms")
    F = pt.F[:, keep]
    cov = np.atleast_2d(np.cov(F, rowvar=False, ddof=1))
    sd = np.sqrt(np.diag(cov))
    cor = np.clip(cov / np.outer(sd, sd), -1.0, 1.0)
    np.fill_diagonal(cor, 1.0)
    cor = (cor + cor.T) / 2
    return TermCovariance(cov, cor, sd, tuple(pt.names[j] for j in keep), dropped)


def layout_predscor(
    tc: TermCovariance,
    sort_by_stdev: bool = True,
    absolute: bool = False,
    cell_area: str = "variance",
    classic: bool = False,
    style: Style | None = None,
    title: str = "",
) -> PredscorScene:
    """Place the cells of the display in the unit square.

    With ``cell_area="variance"`` the side of row/column ``i`` is
    proportional to ``sd_i`` (diagonal area proportional to the variance);
    with ``"stdev"`` it is proportional to ``sqrt(sd_i)``.  ``classic``
    gives all rows the same size.
    """
    if cell_area not in CELL_AREAS:
        raise ValueError(f"cell_area must be one of {CELL_AREAS}, not {cell_area!r}")
    style = style or Style()
    order = list(order_terms(tc.stdevs)) if sort_by_stdev else list(range(tc.p))
    sd = tc.stdevs[order]
    if classic:
        raw = np.ones(len(order))
    elif cell_area == "variance":
        raw = sd
    else:
        raw = np.sqrt(sd)
    sides = raw / raw.sum()
    starts = np.concatenate([[0.0], np.cumsum(sides)[:-1]])
    cells = []
    for a, i in enumerate(order):
        for b, j in enumerate(order):
            c = float(tc.cor[i, j])
            if a == b:
                color = style.diagonal
            else:
                shown = abs(c) if absolute else c
                color = diverging_color(round(shown, 12), style.positive, style.negative)
            cells.append(Cell(a, b, float(starts[b]), float(starts[a]),
                              float(sides[b]), float(sides[a]), c, color))
    return PredscorScene(
        names=tuple(tc.names[k] for k in order),
        sides=sides,
        cells=tuple(cells),
        style=style,
        title=title,
        classic=classic,
        absolute=absolute,
        cell_area=cell_area,
    )
