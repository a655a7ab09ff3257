"""Typed columnar tables loaded from CSV.

A :class:`Dataset` holds one :class:`Column` per CSV field.  Numeric columns
are float arrays with ``nan`` for missing entries; logical, categorical and
character columns are object arrays of ``str`` with ``None`` for missing.
Logical values are normalised to ``"TRUE"``/``"FALSE"`` so that they can be
treated as a two-level factor downstream.
"""

from __future__ import annotations

import csv
import enum
import io
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .errors import DataError

MISSING_TOKENS = frozenset({"", "NA"})
_LOGICAL = {"TRUE": "TRUE", "true": "TRUE", "FALSE": "FALSE", "false": "FALSE"}


class ColumnKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    LOGICAL = "logical"
    CHARACTER = "character"

    @property
    def is_factor(self) -> bool:
        return self is not ColumnKind.NUMERIC


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind
    values: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        if self.kind is ColumnKind.NUMERIC:
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def levels(self) -> list[str]:
        """Distinct non-missing values in reference-first order."""
        present = {v for v in self.values if v is not None}
        return sort_levels(present, self.kind)

    def take(self, index: np.ndarray) -> Column:
        return Column(self.name, self.kind, self.values[index])


def sort_levels(values: Iterable[str], kind: ColumnKind = ColumnKind.CHARACTER) -> list[str]:
    """Order factor levels: FALSE < TRUE for logicals, numerically when every
    level is a number (so ``"10"`` follows ``"9"``), lexically otherwise."""
    vals = set(values)
    if kind is ColumnKind.LOGICAL:
        return [v for v in ("FALSE", "TRUE") if v in vals]
    try:
        return sorted(vals, key=lambda s: (float(s), s))
    except ValueError:
        return sorted(vals)


@dataclass(frozen=True)
class Dataset:
    columns: dict[str, Column]
    n_rows: int
    row_ids: tuple[str, ...] | None = None
    id_column: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for col in self.columns.values():
            if len(col.values) != self.n_rows:
                raise DataError(
                    f"column {col.name!r} has {len(col.values)} entries, expected {self.n_rows}"
                )
        if self.row_ids is not None and len(self.row_ids) != self.n_rows:
            raise DataError("row_ids length does not match n_rows")

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def schema(self) -> dict[str, ColumnKind]:
        return {name: col.kind for name, col in self.columns.items()}

    def take(self, index) -> Dataset:
        index = np.asarray(index)
        ids = None if self.row_ids is None else tuple(self.row_ids[i] for i in index)
        return Dataset(
            {k: c.take(index) for k, c in self.columns.items()},
            len(index),
            ids,
            self.id_column,
        )

    def row(self, i: int) -> dict[str, object]:
        """Return row ``i`` (0-based) as a plain record."""
        if not 0 <= i < self.n_rows:
            raise DataError(f"row index {i} out of range for {self.n_rows} rows")
        out: dict[str, object] = {}
        for name, col in self.columns.items():
            v = col.values[i]
            out[name] = float(v) if col.kind is ColumnKind.NUMERIC else v
        return out

    def find_row(self, row_id: str) -> int:
        if self.row_ids is None:
            raise DataError("dataset has no row identifiers")
        try:
            return self.row_ids.index(row_id)
        except ValueError:
            raise DataError(f"no row with identifier {row_id!r}") from None


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def infer_column_kind(raw: Sequence[str | None]) -> ColumnKind:
    """Classify a column of raw CSV strings.

    Missing tokens are ignored.  All-numeric -> NUMERIC; all in
    {TRUE, FALSE, true, false} -> LOGICAL; anything else -> CHARACTER.
    A column with no observed values is NUMERIC.
    """
    present = [s for s in raw if s is not None and s not in MISSING_TOKENS]
    if all(_is_number(s) for s in present):
        return ColumnKind.NUMERIC
    if all(s in _LOGICAL for s in present):
        return ColumnKind.LOGICAL
    return ColumnKind.CHARACTER


def make_column(name: str, raw: Sequence[str | None], kind: ColumnKind | None = None) -> Column:
    """Build a typed column from raw strings, inferring its kind unless given."""
    cleaned = [None if (s is None or s in MISSING_TOKENS) else s for s in raw]
    if kind is None:
        kind = infer_column_kind(cleaned)
    if kind is ColumnKind.NUMERIC:
        try:
            values = np.array([np.nan if s is None else float(s) for s in cleaned], dtype=float)
        except ValueError as exc:
            raise DataError(f"column {name!r} is not numeric: {exc}") from None
    elif kind is ColumnKind.LOGICAL:
        bad = [s for s in cleaned if s is not None and s not in _LOGICAL]
        if bad:
            raise DataError(f"column {name!r} has non-logical value {bad[0]!r}")
        values = np.array([None if s is None else _LOGICAL[s] for s in cleaned], dtype=object)
    else:
        values = np.array(cleaned, dtype=object)
        if kind is ColumnKind.CATEGORICAL:
            # integer-coded labels read as "1.0" would otherwise differ from "1"
            values = np.array([None if s is None else _canonical_label(s) for s in cleaned], dtype=object)
    return Column(name, kind, values)


def _canonical_label(s: str) -> str:
    try:
        x = float(s)
    except ValueError:
        return s
    return str(int(x)) if x.is_integer() else s


def read_csv(
    source: str | bytes | IO[str] | IO[bytes],
    *,
    delimiter: str = ",",
    header: bool = True,
    id_column: str | None = None,
    kinds: Mapping[str, ColumnKind] | None = None,
) -> Dataset:
    """Read a delimited text table.

    Parameters
    ----------
    source
        Path, raw text/bytes, or an open text or binary stream.
    delimiter
        Single field separator character.
    header
        Whether the first record holds column names.  Without a header the
        columns are named ``V1, V2, ...``.
    id_column
        Column to use as row identifiers; it is removed from the columns.
    kinds
        Per-column kind overrides, e.g. ``{"pclass": ColumnKind.CATEGORICAL}``.
    """
    text = _read_text(source)
    records = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    records = [r for r in records if r]
    if not records:
        raise DataError("empty file")
    if header:
        names, body = records[0], records[1:]
    else:
        names, body = [f"V{i + 1}" for i in range(len(records[0]))], records
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate header names: {', '.join(dup)}")
    width = len(names)
    for lineno, rec in enumerate(body, start=2 if header else 1):
        if len(rec) != width:
            raise DataError(f"ragged row at record {lineno}: {len(rec)} fields, expected {width}")

    kinds = dict(kinds or {})
    unknown = set(kinds) - set(names)
    if unknown:
        raise DataError(f"kind override for unknown column(s): {', '.join(sorted(unknown))}")

    row_ids = None
    if id_column is not None:
        if id_column not in names:
            raise DataError(f"id column {id_column!r} not found")
        j = names.index(id_column)
        row_ids = tuple(rec[j] for rec in body)

    columns = {}
    for j, name in enumerate(names):
        if name == id_column:
            continue
        columns[name] = make_column(name, [rec[j] for rec in body], kinds.get(name))
    return Dataset(columns, len(body), row_ids, id_column)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        with open(source, encoding="utf-8-sig", newline="") as fh:
            return fh.read()
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def complete_cases(ds: Dataset, needed: Iterable[str]) -> tuple[Dataset, int]:
    """Keep rows with no missing value in any of ``needed``.

    Returns the reduced dataset and the number of dropped rows.  Raises
    :class:`DataError` when nothing is left.
    """
    needed = list(dict.fromkeys(needed))
    missing = [n for n in needed if n not in ds]
    if missing:
        raise DataError(f"unknown column(s): {', '.join(missing)}")
    keep = np.ones(ds.n_rows, dtype=bool)
    for name in needed:
        keep &= ~ds[name].missing
    dropped = int(ds.n_rows - keep.sum())
    if not keep.any():
        raise DataError("no complete cases")
    if dropped == 0:
        return ds, 0
    return ds.take(np.flatnonzero(keep)), dropped
