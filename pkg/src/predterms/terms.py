"""Centered prediction terms and per-case explanations.

For a fitted model with intercept ``a`` the linear prediction of a case is
split into one centered contribution per formula term,

    eta = centercept + f_1 + ... + f_p,

where each ``f_j`` is that term's (grouped) contribution minus its training
mean, and ``centercept`` is the mean linear prediction over the training
data.  Centering constants come from the model, never from the data being
explained.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .data import Dataset
from .errors import ModelError
from .formula import ModelTerm, TermKind
from .model import FittedModel, Link, inverse_link, term_sums


class Direction(str, enum.Enum):
    UP = "up"
    DOWN = "down"
    NONE = ""


@dataclass(frozen=True)
class PredictionTerms:
    F: np.ndarray  # (n, p) centered contributions, formula order
    names: tuple[str, ...]
    stdevs: np.ndarray
    directions: tuple[Direction, ...]
    centercept: float
    total: np.ndarray  # row sums of F
    order: tuple[int, ...]  # display order, decreasing stdev
    response: str
    link: Link

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def p(self) -> int:
        return self.F.shape[1]

    @property
    def total_stdev(self) -> float:
        return float(np.std(self.total, ddof=1)) if self.n > 1 else 0.0


def term_direction(term: ModelTerm, coefficients: Sequence[float]) -> Direction:
    """Arrow for a term: only numeric main effects get one, from the slope sign."""
    if term.kind is not TermKind.MAIN_NUMERIC:
        return Direction.NONE
    b = float(coefficients[0])
    if b > 0:
        return Direction.UP
    if b < 0:
        return Direction.DOWN
    return Direction.NONE


def order_terms(pt: PredictionTerms | Sequence[float], max_terms: int | None = None) -> tuple[int, ...]:
    """Indices by decreasing stdev; ties keep formula order.

    Zero-stdev terms always come last.  Only the first ``max_terms`` indices
    are returned; the remaining terms still count in the total.
    """
    sd = pt.stdevs if isinstance(pt, PredictionTerms) else np.asarray(pt, dtype=float)
    if max_terms is not None and max_terms < 1:
        raise ValueError("max_terms must be at least 1")
    idx = sorted(range(len(sd)), key=lambda j: (-sd[j], j))
    return tuple(idx[:max_terms] if max_terms is not None else idx)


def compute_terms(m: FittedModel, ds: Dataset) -> PredictionTerms:
    """Prediction terms of every row of ``ds``."""
    G = term_sums(m, ds)
    F = G - m.term_centers
    n = F.shape[0]
    stdevs = np.std(F, axis=0, ddof=1) if n > 1 else np.zeros(F.shape[1])
    # constant contributions are exactly zero-spread; keep float noise out of the ordering
    stdevs = np.where(np.ptp(G, axis=0) == 0, 0.0, stdevs) if n else stdevs
    directions = tuple(term_direction(tf.term, [c.value for c in tf.coefs]) for tf in m.terms)
    directions = tuple(d if s > 0 else Direction.NONE for d, s in zip(directions, stdevs))
    total = F.sum(axis=1)
    return PredictionTerms(
        F=F,
        names=tuple(m.term_names),
        stdevs=stdevs,
        directions=directions,
        centercept=m.centercept,
        total=total,
        order=order_terms(stdevs),
        response=str(m.response),
        link=m.link,
    )


@dataclass(frozen=True)
class CaseExplanation:
    values: np.ndarray  # f_j(case), formula order
    names: tuple[str, ...]
    sum: float
    centercept: float
    total_linear: float
    response_units: float
    response: str
    link: Link
    index: int | None = None  # 0-based training row, None for a supplied record
    label: str | None = None

    @property
    def above(self) -> np.ndarray:
        return self.values > 0

    @property
    def below(self) -> np.ndarray:
        return self.values < 0


def explain_case(
    m: FittedModel,
    pt: PredictionTerms | None,
    case: int | Mapping[str, object],
    ds: Dataset | None = None,
) -> CaseExplanation:
    """Explain one case.

    ``case`` is either a 0-based row index into ``ds`` (the data ``pt`` was
    computed on) or a record mapping column names to values.  The returned
    values reproduce the matching row of ``pt.F`` exactly for in-sample rows.
    """
    if pt is not None and tuple(pt.names) != tuple(m.term_names):
        raise ModelError("prediction terms were computed from a different model")
    label = None
    if isinstance(case, (int, np.integer)):
        if ds is None:
            raise ModelError("an in-sample case index needs the dataset")
        index = int(case)
        record = ds.row(index)
        if ds.row_ids is not None:
            label = ds.row_ids[index]
    else:
        index = None
        record = case
    values = term_sums(m, record)[0] - m.term_centers
    s = math.fsum(values)
    total = s + m.centercept
    return CaseExplanation(
        values=values,
        names=tuple(m.term_names),
        sum=s,
        centercept=m.centercept,
        total_linear=total,
        response_units=float(inverse_link(m, total)),
        response=str(m.response),
        link=m.link,
        index=index,
        label=label,
    )


# ---------------------------------------------------------------------------
# Terminal tables
# ---------------------------------------------------------------------------


def _round_sig(x: float, digits: int) -> Decimal:
    d = Decimal(repr(float(x)))
    if d == 0:
        return d
    exp = d.adjusted() - digits + 1
    return d.quantize(Decimal(1).scaleb(exp), rounding=ROUND_HALF_EVEN)


def format_common(values: Sequence[float], digits: int = 4) -> list[str]:
    """Round each value to ``digits`` significant digits (half-even), then
    print all with the largest number of decimals any of them needs."""
    rounded = [_round_sig(v, digits) for v in values]
    decimals = max((max(0, -r.as_tuple().exponent) for r in rounded if r != 0), default=0)
    q = Decimal(1).scaleb(-decimals)
    return [str(r.quantize(q, rounding=ROUND_HALF_EVEN)) for r in rounded]


def print_term_table(pt: PredictionTerms) -> str:
    """Stdev table in formula order with up/down flags and the total."""
    labels = list(pt.names)
    stdevs = list(pt.stdevs)
    flags = [d.value for d in pt.directions]
    if pt.p:
        labels.append(f"Total prediction of {pt.response}")
        stdevs.append(pt.total_stdev)
        flags.append("")
    header = ("prediction term", "stdev", "up/down")
    nums = format_common(stdevs) if stdevs else []
    w0 = max([len(header[0])] + [len(s) for s in labels])
    w1 = max([len(header[1])] + [len(s) for s in nums])
    w2 = len(header[2])
    lines = [f" {header[0]:>{w0}} {header[1]:>{w1}} {header[2]:>{w2}}"]
    for i, (lab, num) in enumerate(zip(labels, nums)):
        if i == len(labels) - 1 and pt.p:
            lines.append(f" {lab:>{w0}} {num:>{w1}}")
        else:
            lines.append(f" {lab:>{w0}} {num:>{w1}} {flags[i]:>{w2}}")
    return "\n".join(lines) + "\n"


def print_case_table(ce: CaseExplanation) -> str:
    """Signed per-term values, then SUM, centercept and the totals."""
    mags = [abs(v) for v in (*ce.values, ce.sum, ce.centercept, ce.total_linear)]
    top = max(mags) if mags else 0.0
    decimals = max(0, 5 - math.floor(math.log10(top))) if top > 0 else 5
    decimals = min(decimals, 12)

    def signed(v: float) -> str:
        return f"{v:+.{decimals}f}"

    def plain(v: float) -> str:
        return f"{v: .{decimals}f}"

    rows = [(n, signed(v)) for n, v in zip(ce.names, ce.values)]
    rows.append(("SUM", signed(ce.sum)))
    rows.append(("centercept", plain(ce.centercept)))
    if ce.link is Link.IDENTITY:
        rows.append((f"Total prediction of {ce.response}", plain(ce.total_linear)))
    else:
        rows.append((f"Total linear prediction of {ce.response}", plain(ce.total_linear)))
        rows.append((f"Total prediction of {ce.response} in response units",
                     f"{ce.response_units: .5f}"))
    header = ("prediction term", "value")
    w0 = max(len(header[0]), *(len(r[0]) for r in rows))
    w1 = max(len(header[1]), *(len(r[1]) for r in rows))
    lines = [f" {header[0]:>{w0}} {header[1]:>{w1}}"]
    lines += [f" {a:>{w0}} {b:>{w1}}" for a, b in rows]
    return "\n".join(lines) + "\n"
