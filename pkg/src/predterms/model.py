"""Treatment-coded design matrices and the two fitters (OLS and logistic).

Every fitted coefficient remembers the training mean of its design column.
Those means are the centering constants of the prediction terms, so a saved
model can explain a new case without the training data.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .data import ColumnKind, Dataset, complete_cases
from .errors import ConvergenceWarning, DataError, ModelError, SchemaError
from .formula import ModelTerm, ResponseSpec, TermKind, TermPlan, build_plan

SCHEMA_VERSION = 1
RANK_TOL = 1e-7
IRLS_MAX_ITER = 25
IRLS_TOL = 1e-8
IRLS_MAX_HALVINGS = 30


class Link(str, enum.Enum):
    IDENTITY = "identity"
    LOGIT = "logit"


FAMILY_LINK = {"gaussian": Link.IDENTITY, "binomial": Link.LOGIT}


# ---------------------------------------------------------------------------
# Design matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignColumn:
    name: str
    term: int
    levels: tuple[str | None, ...]  # one entry per factor; None for numeric factors


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    columns: tuple[DesignColumn, ...]
    terms: tuple[ModelTerm, ...]
    groups: tuple[tuple[int, ...], ...]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _factor_label(column: str, transform: str | None) -> str:
    return f"log({column})" if transform == "log" else column


def _encode_term(term: ModelTerm, term_index: int, get) -> list[tuple[DesignColumn, np.ndarray]]:
    """Design columns for one term.  ``get(name)`` returns the raw column."""
    parts: list[list[tuple[str, str | None, np.ndarray]]] = []
    for j, (col, trans, kind) in enumerate(zip(term.columns, term.transforms, term.column_kinds)):
        raw = get(col)
        if kind.is_factor:
            levels = term.levels[j]
            known = set(levels)
            for v in raw:
                if v not in known:
                    raise ModelError(f"unseen level {v!r} for {col!r} (known: {', '.join(levels)})")
            parts.append([
                (f"{col}{lv}", lv, (raw == lv).astype(float)) for lv in levels[1:]
            ])
        else:
            x = np.asarray(raw, dtype=float)
            if trans == "log":
                if np.any(x <= 0):
                    raise ModelError(f"log of non-positive value in {col!r}")
                x = np.log(x)
            parts.append([(_factor_label(col, trans), None, x)])
    out = []
    for combo in itertools.product(*parts):
        name = ":".join(p[0] for p in combo)
        values = combo[0][2]
        for p in combo[1:]:
            values = values * p[2]
        out.append((DesignColumn(name, term_index, tuple(p[1] for p in combo)), values))
    return out


def _with_levels(term: ModelTerm, ds: Dataset) -> ModelTerm:
    levels = []
    for j, (col, kind) in enumerate(zip(term.columns, term.column_kinds)):
        if not kind.is_factor:
            levels.append(None)
            continue
        given = term.levels[j] if term.levels is not None else None
        lv = tuple(given) if given is not None else tuple(ds[col].levels())
        if len(lv) < 2:
            raise ModelError(f"categorical column {col!r} has a single level {list(lv)}")
        levels.append(lv)
    if all(lv is None for lv in levels):
        return replace(term, levels=None)
    return replace(term, levels=tuple(levels))


def build_design(ds: Dataset, plan: TermPlan) -> DesignMatrix:
    """Treatment-coded design matrix (no intercept column).

    Factor columns use their first level (sorted order) as reference.
    Interactions multiply every pair of constituent columns, so a
    numeric:factor term yields L-1 columns and factor:factor yields
    (L1-1)(L2-1).
    """
    for name in plan.columns[1:]:
        if ds[name].missing.any():
            raise DataError(f"column {name!r} has missing values; use complete_cases first")
    terms = tuple(_with_levels(t, ds) for t in plan.terms)
    return _design(terms, lambda name: ds[name].values, ds.n_rows)


def _design(terms: Sequence[ModelTerm], get, n: int) -> DesignMatrix:
    cols: list[DesignColumn] = []
    vals: list[np.ndarray] = []
    groups = []
    for i, term in enumerate(terms):
        enc = _encode_term(term, i, get)
        groups.append(tuple(range(len(cols), len(cols) + len(enc))))
        for dc, v in enc:
            cols.append(dc)
            vals.append(v)
    values = np.column_stack(vals) if vals else np.empty((n, 0))
    return DesignMatrix(values, tuple(cols), tuple(terms), tuple(groups))


def response_values(ds: Dataset, spec: ResponseSpec) -> np.ndarray:
    col = ds[spec.column]
    if col.kind is ColumnKind.LOGICAL:
        y = np.array([np.nan if v is None else float(v == "TRUE") for v in col.values])
    elif col.kind is ColumnKind.NUMERIC:
        y = col.values.astype(float)
    else:
        raise ModelError(f"response {spec.column!r} is categorical")
    if spec.transform == "log":
        if np.any(y <= 0):
            raise ModelError(f"log of non-positive response value in {spec.column!r}")
        y = np.log(y)
    elif spec.transform == "reciprocal":
        if np.any(y == 0):
            raise ModelError(f"reciprocal of zero response value in {spec.column!r}")
        y = 1.0 / y
    return y


# ---------------------------------------------------------------------------
# Fitted model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coef:
    column: str
    levels: tuple[str | None, ...]
    value: float
    train_mean: float


@dataclass(frozen=True)
class TermFit:
    term: ModelTerm
    coefs: tuple[Coef, ...]

    @property
    def name(self) -> str:
        return self.term.name


@dataclass(frozen=True)
class FittedModel:
    link: Link
    response: ResponseSpec
    intercept: float
    terms: tuple[TermFit, ...]
    n_train: int = 0
    iterations: int = 1
    converged: bool = True
    deviance: float | None = None

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c.value for t in self.terms for c in t.coefs])

    @property
    def train_means(self) -> np.ndarray:
        return np.array([c.train_mean for t in self.terms for c in t.coefs])

    @property
    def column_names(self) -> list[str]:
        return [c.column for t in self.terms for c in t.coefs]

    @property
    def term_names(self) -> list[str]:
        return [t.name for t in self.terms]

    @property
    def model_terms(self) -> tuple[ModelTerm, ...]:
        return tuple(t.term for t in self.terms)

    @property
    def input_columns(self) -> list[str]:
        return list(dict.fromkeys(c for t in self.terms for c in t.term.columns))

    @property
    def plan(self) -> TermPlan:
        return TermPlan(self.response, self.model_terms)

    @property
    def term_centers(self) -> np.ndarray:
        """Training mean of each term's uncentered contribution."""
        return np.array([math.fsum(c.value * c.train_mean for c in t.coefs) for t in self.terms])

    @property
    def centercept(self) -> float:
        """Mean linear prediction over the training data."""
        return math.fsum([self.intercept, *self.term_centers])

    @property
    def family(self) -> str:
        return "gaussian" if self.link is Link.IDENTITY else "binomial"


def _assemble(link, response, intercept, X: DesignMatrix, b, xbar, **diag) -> FittedModel:
    terms = []
    for term, idx in zip(X.terms, X.groups):
        coefs = tuple(
            Coef(X.columns[i].name, X.columns[i].levels, float(b[i]), float(xbar[i])) for i in idx
        )
        terms.append(TermFit(term, coefs))
    return FittedModel(link, response, float(intercept), tuple(terms), **diag)


def _check_rank(Xc: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pivoted QR of the centered design; raise if columns are aliased."""
    Q, R, P = scipy.linalg.qr(Xc, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > RANK_TOL * scale)) if scale > 0 else 0
    if rank < Xc.shape[1]:
        aliased = [names[j] for j in P[rank:]]
        raise ModelError(f"design is rank deficient; aliased column(s): {', '.join(aliased)}")
    return Q, R, P


def fit_ols(X: DesignMatrix, y: np.ndarray, response: ResponseSpec | None = None) -> FittedModel:
    """Least-squares fit with intercept.

    The design is column-centered and solved through a pivoted Householder
    QR factorization, never the normal equations.
    """
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if n <= k + 1:
        raise ModelError(f"underdetermined: {n} cases for {k} slopes plus intercept")
    xbar = X.values.mean(axis=0)
    Xc = X.values - xbar
    ybar = y.mean()
    if k:
        Q, R, P = _check_rank(Xc, X.names)
        bp = scipy.linalg.solve_triangular(R, Q.T @ (y - ybar))
        b = np.empty(k)
        b[P] = bp
    else:
        b = np.empty(0)
    intercept = ybar - xbar @ b
    resid = y - intercept - X.values @ b
    return _assemble(
        Link.IDENTITY, response or ResponseSpec("y"), intercept, X, b, xbar,
        n_train=n, iterations=1, converged=True, deviance=float(resid @ resid),
    )


def _log_expit(eta: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -eta)


def expit(eta):
    """Logistic function without overflow for large ``|eta|``."""
    eta = np.asarray(eta, dtype=float)
    e = np.exp(-np.abs(eta))
    out = np.where(eta >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def binomial_deviance(y: np.ndarray, eta: np.ndarray) -> float:
    return float(-2.0 * np.sum(y * _log_expit(eta) + (1.0 - y) * _log_expit(-eta)))


def logistic_loglik(Z: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    """Bernoulli log-likelihood of coefficients ``beta`` for design ``Z``."""
    return -0.5 * binomial_deviance(np.asarray(y, dtype=float), Z @ beta)


def logistic_score(Z: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gradient of :func:`logistic_loglik`, ``Z'(y - p)``."""
    return Z.T @ (np.asarray(y, dtype=float) - expit(Z @ beta))


def fit_logistic(X: DesignMatrix, y: np.ndarray, response: ResponseSpec | None = None) -> FittedModel:
    """Maximum-likelihood logistic regression by IRLS.

    Starts from the intercept-only solution.  Stops when the largest
    coefficient change or the relative deviance change drops below 1e-8
    and then takes one more Newton step.  A step that would raise the
    deviance is halved until it does not.  After 25 iterations without
    meeting the test ``converged`` is False and a
    :class:`ConvergenceWarning` is emitted.
    """
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ModelError("binomial response must be coded 0/1")
    n, k = X.shape
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise ModelError("response has a single class")
    if n <= k + 1:
        raise ModelError(f"underdetermined: {n} cases for {k} slopes plus intercept")
    xbar = X.values.mean(axis=0)
    Xc = X.values - xbar
    if k:
        _check_rank(Xc, X.names)
    Z = np.column_stack([np.ones(n), Xc])
    beta = np.zeros(k + 1)
    beta[0] = math.log(ybar / (1.0 - ybar))
    eta = Z @ beta
    dev = binomial_deviance(y, eta)
    def newton(beta, eta, dev):
        p = expit(eta)
        w = p * (1.0 - p)
        ok = w > 1e-300
        sw = np.sqrt(w[ok])
        # Newton step solved as a weighted least-squares problem
        step, *_ = scipy.linalg.lstsq(Z[ok] * sw[:, None], (y[ok] - p[ok]) / sw, lapack_driver="gelsy")
        # halve the step while it would raise the deviance (near separation
        # a full step can overshoot by orders of magnitude)
        for _ in range(IRLS_MAX_HALVINGS):
            new_beta = beta + step
            new_eta = Z @ new_beta
            new_dev = binomial_deviance(y, new_eta)
            if math.isfinite(new_dev) and new_dev <= dev * (1.0 + 1e-12) + 1e-12:
                break
            step = step / 2.0
        return new_beta, new_eta, new_dev

    converged = False
    it = 0
    for it in range(1, IRLS_MAX_ITER + 1):
        new_beta, new_eta, new_dev = newton(beta, eta, dev)
        delta = np.max(np.abs(new_beta - beta))
        rel = abs(new_dev - dev) / (abs(new_dev) + 0.1)
        beta, eta, dev = new_beta, new_eta, new_dev
        if delta < IRLS_TOL or rel < IRLS_TOL:
            converged = True
            break
    if converged:
        # the deviance test fires one step early; a last Newton step is
        # nearly free and brings the score equations to rounding level
        beta, eta, dev = newton(beta, eta, dev)
    if not converged:
        warnings.warn(
            f"IRLS did not converge in {IRLS_MAX_ITER} iterations; the classes may be separated",
            ConvergenceWarning,
            stacklevel=2,
        )
    p = expit(eta)
    if np.any((p < 1e-10) | (p > 1 - 1e-10)):
        warnings.warn(
            "fitted probabilities numerically 0 or 1; the classes may be separated",
            ConvergenceWarning,
            stacklevel=2,
        )
    b = beta[1:]
    intercept = beta[0] - xbar @ b
    return _assemble(
        Link.LOGIT, response or ResponseSpec("y"), intercept, X, b, xbar,
        n_train=n, iterations=it, converged=converged, deviance=dev,
    )


def fit(ds: Dataset, formula: str | TermPlan, family: str = "gaussian") -> tuple[FittedModel, int]:
    """Parse, select complete cases, build the design and fit.

    Returns the model and the number of rows dropped for missing values.
    """
    if family not in FAMILY_LINK:
        raise ModelError(f"unknown family {family!r}; use gaussian or binomial")
    plan = build_plan(formula, ds.schema()) if isinstance(formula, str) else formula
    cc, dropped = complete_cases(ds, plan.columns)
    X = build_design(cc, plan)
    y = response_values(cc, plan.response)
    if FAMILY_LINK[family] is Link.IDENTITY:
        return fit_ols(X, y, plan.response), dropped
    return fit_logistic(X, y, plan.response), dropped


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def _getter(m: FittedModel, source: Dataset | Mapping[str, object]):
    kinds = {c: k for t in m.model_terms for c, k in zip(t.columns, t.column_kinds)}
    if isinstance(source, Dataset):
        for name in kinds:
            if name not in source:
                raise ModelError(f"missing field {name!r}")
            if source[name].missing.any():
                raise ModelError(f"missing values in {name!r}")
        return (lambda name: source[name].values), source.n_rows
    absent = [c for c in kinds if c not in source or source[c] is None]
    if absent:
        raise ModelError(f"missing field(s): {', '.join(absent)}")

    def get(name):
        v = source[name]
        if kinds[name].is_factor:
            if isinstance(v, bool):
                v = "TRUE" if v else "FALSE"
            return np.array([str(v)], dtype=object)
        x = float(v)
        if math.isnan(x):
            raise ModelError(f"missing value in {name!r}")
        return np.array([x])

    return get, 1


def model_design(m: FittedModel, source: Dataset | Mapping[str, object]) -> DesignMatrix:
    """Design matrix for new data, encoded exactly as at fit time."""
    get, n = _getter(m, source)
    return _design(m.model_terms, get, n)


def term_sums(m: FittedModel, source: Dataset | Mapping[str, object]) -> np.ndarray:
    """Uncentered per-term contributions, shape (n, p).

    Each entry is accumulated column by column in a fixed order so that a
    single record and a full dataset give bit-identical values.
    """
    D = model_design(m, source)
    n = D.values.shape[0]
    out = np.zeros((n, len(m.terms)))
    for j, (tf, idx) in enumerate(zip(m.terms, D.groups)):
        acc = np.zeros(n)
        for coef, i in zip(tf.coefs, idx):
            acc = acc + coef.value * D.values[:, i]
        out[:, j] = acc
    return out


def linear_predictors(m: FittedModel, source: Dataset) -> np.ndarray:
    return m.intercept + term_sums(m, source).sum(axis=1)


def linear_predictor(m: FittedModel, row: Mapping[str, object]) -> float:
    """``a + sum_j b_j x_j(row)`` with transforms and dummies applied."""
    return float(m.intercept + term_sums(m, row).sum())


def inverse_link(m: FittedModel | Link, eta):
    link = m.link if isinstance(m, FittedModel) else Link(m)
    if link is Link.IDENTITY:
        return eta if np.ndim(eta) else float(eta)
    return expit(eta)


def link_function(m: FittedModel | Link, mu):
    link = m.link if isinstance(m, FittedModel) else Link(m)
    if link is Link.IDENTITY:
        return mu
    mu = np.asarray(mu, dtype=float)
    out = np.log(mu) - np.log1p(-mu)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_dict(m: FittedModel) -> dict:
    terms = []
    for tf in m.terms:
        t = tf.term
        entry = {
            "name": t.name,
            "kind": t.kind.value,
            "columns": list(t.columns),
            "transforms": list(t.transforms),
            "column_kinds": [k.value for k in t.column_kinds],
        }
        if t.levels is not None and any(lv is not None for lv in t.levels):
            entry["levels"] = {c: list(lv) for c, lv in zip(t.columns, t.levels) if lv is not None}
        coefs = []
        for c in tf.coefs:
            ce = {"column": c.column}
            if any(lv is not None for lv in c.levels):
                ce["level"] = c.levels[0] if len(c.levels) == 1 else list(c.levels)
            ce["value"] = c.value
            ce["train_mean"] = c.train_mean
            coefs.append(ce)
        entry["coef"] = coefs
        terms.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "link": m.link.value,
        "response": {"column": m.response.column, "transform": m.response.transform},
        "intercept": m.intercept,
        "terms": terms,
        "fit": {
            "n_train": m.n_train,
            "iterations": m.iterations,
            "converged": m.converged,
            "deviance": m.deviance,
        },
    }


def save_model(m: FittedModel) -> str:
    """JSON text for ``m``.  Floats use the shortest repr that round-trips."""
    return json.dumps(model_to_dict(m), indent=2)


def _need(doc: Mapping, key: str, where: str = "model"):
    if key not in doc:
        raise SchemaError(f"{where} document is missing the {key!r} field")
    return doc[key]


def model_from_dict(doc: Mapping) -> FittedModel:
    if not isinstance(doc, Mapping):
        raise SchemaError("model document must be a JSON object")
    version = _need(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    try:
        link = Link(_need(doc, "link"))
    except ValueError:
        raise SchemaError(f"unknown link {doc['link']!r}") from None
    resp = _need(doc, "response")
    response = ResponseSpec(_need(resp, "column", "response"), resp.get("transform"))
    terms = []
    for td in _need(doc, "terms"):
        cols = tuple(_need(td, "columns", "term"))
        kinds = tuple(ColumnKind(k) for k in _need(td, "column_kinds", "term"))
        lv_map = td.get("levels") or {}
        levels = tuple(tuple(lv_map[c]) if c in lv_map else None for c in cols)
        term = ModelTerm(
            TermKind(_need(td, "kind", "term")),
            cols,
            tuple(_need(td, "transforms", "term")),
            kinds,
            levels if any(lv is not None for lv in levels) else None,
        )
        coefs = []
        for cd in _need(td, "coef", "term"):
            lv = cd.get("level")
            if lv is None:
                lvt = tuple(None for _ in cols)
            elif isinstance(lv, list):
                lvt = tuple(lv)
            else:
                lvt = (lv,)
            coefs.append(Coef(_need(cd, "column", "coef"), lvt,
                              float(_need(cd, "value", "coef")), float(_need(cd, "train_mean", "coef"))))
        if term.name != td.get("name", term.name):
            raise SchemaError(f"term name {td['name']!r} does not match its columns")
        terms.append(TermFit(term, tuple(coefs)))
    diag = doc.get("fit", {})
    dev = diag.get("deviance")
    return FittedModel(
        link, response, float(_need(doc, "intercept")), tuple(terms),
        n_train=int(diag.get("n_train", 0)),
        iterations=int(diag.get("iterations", 1)),
        converged=bool(diag.get("converged", True)),
        deviance=None if dev is None else float(dev),
    )


def load_model(text: str | bytes) -> FittedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed model JSON: {exc}") from None
    try:
        return model_from_dict(doc)
    except (TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"malformed model document: {exc}") from None
