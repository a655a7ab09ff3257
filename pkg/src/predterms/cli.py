"""Command line front end.

Exit codes: 0 on success, 1 for a usage problem (the message names the
offending flag), 2 when the data or model cannot be used.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from collections.abc import Mapping, Sequence

import numpy as np

from .data import ColumnKind, Dataset, read_csv
from .errors import CaseError, DataError, FormulaError, PredTermsError
from .model import FAMILY_LINK, FittedModel, fit, load_model, save_model
from .predscor import CELL_AREAS, layout_predscor, term_covariance
from .predsplot import DisplayStyle, layout_case, layout_overall, layout_staircase
from .render import render_svg
from .scene import Style
from .terms import compute_terms, explain_case, order_terms, print_case_table, print_term_table

STYLE_ENV = "PREDTERMS_STYLE"


class UsageError(Exception):
    def __init__(self, flag: str | None, message: str):
        self.flag = flag
        super().__init__(f"{flag}: {message}" if flag else message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(None, message)


# ---------------------------------------------------------------------------
# Case records
# ---------------------------------------------------------------------------


def _model_columns(m: FittedModel) -> dict[str, tuple[ColumnKind, tuple[str, ...] | None]]:
    cols: dict[str, tuple[ColumnKind, tuple[str, ...] | None]] = {}
    for t in m.model_terms:
        for j, (c, k) in enumerate(zip(t.columns, t.column_kinds)):
            lv = t.levels[j] if t.levels is not None else None
            cols[c] = (k, lv)
    return cols


def _as_label(v) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def parse_case_json(text: str, model: FittedModel) -> dict[str, object]:
    """Turn a JSON object into a case record for ``model``.

    Numbers may be given as strings; factor values are compared as labels
    (so ``2`` and ``"2"`` agree).  Every model input must be present.  The
    response column may be included and is ignored.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, Mapping):
        raise CaseError("case must be a JSON object")
    cols = _model_columns(model)
    unknown = [k for k in obj if k not in cols and k != model.response.column]
    if unknown:
        raise CaseError(f"unknown column(s): {', '.join(unknown)}")
    missing = [c for c in cols if c not in obj or obj[c] is None]
    if missing:
        raise CaseError(f"missing column(s): {', '.join(missing)}")
    record: dict[str, object] = {}
    for c, (kind, levels) in cols.items():
        v = obj[c]
        if kind is ColumnKind.NUMERIC:
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise CaseError(f"column {c!r} needs a number, got {v!r}")
            try:
                x = float(v)
            except ValueError:
                raise CaseError(f"column {c!r} needs a number, got {v!r}") from None
            if not math.isfinite(x):
                raise CaseError(f"column {c!r} is not finite")
            record[c] = x
        else:
            label = _as_label(v)
            if kind is ColumnKind.LOGICAL:
                label = {"true": "TRUE", "false": "FALSE"}.get(label.lower(), label)
            if levels is not None and label not in levels:
                raise CaseError(f"unseen level {label!r} for {c!r} (known: {', '.join(levels)})")
            record[c] = label
    return record


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, not {text!r}")


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return k


def _positive_float(text: str) -> float:
    try:
        h = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not h > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return h


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="predterms", description="Prediction-term tables and plots for linear and logistic models.")
    sub = p.add_subparsers(dest="command", metavar="{fit,terms,plot,explain,cor}", parser_class=_Parser)
    sub.required = True

    def data_args(sp):
        sp.add_argument("--data", required=True, help="CSV file")
        sp.add_argument("--id-col", help="column holding row identifiers")
        sp.add_argument("--categorical", action="append", default=[],
                        help="comma-separated columns to treat as categorical (repeatable)")
        sp.add_argument("--delimiter", default=",", help="field separator (default ',')")

    def model_args(sp):
        data_args(sp)
        sp.add_argument("--model", required=True, help="model JSON written by 'fit'")

    def plot_args(sp):
        sp.add_argument("--display", choices=("hist", "density"), default="hist")
        sp.add_argument("--bandwidth", type=_positive_float)
        sp.add_argument("--max-terms", type=_positive_int)
        sp.add_argument("--profile", action="store_true")
        sp.add_argument("--full-total-axis", action="store_true")
        sp.add_argument("--title", default="")

    sp = sub.add_parser("fit", help="fit a model and save it as JSON")
    data_args(sp)
    sp.add_argument("--formula", required=True, help="e.g. 'hp ~ topspeed + length + displ'")
    sp.add_argument("--family", choices=sorted(FAMILY_LINK), default="gaussian")
    sp.add_argument("--out", help="where to write the model JSON")

    sp = sub.add_parser("terms", help="print the prediction-term stdev table")
    model_args(sp)

    sp = sub.add_parser("plot", help="write the predictions plot as SVG")
    model_args(sp)
    sp.add_argument("--out", required=True, help="SVG file ('-' for standard output)")
    sp.add_argument("--case", help="1-based row number, row id, or JSON object")
    sp.add_argument("--staircase", action="store_true")
    plot_args(sp)

    sp = sub.add_parser("explain", help="print a case table, optionally with its plot")
    model_args(sp)
    sp.add_argument("--case", required=True, help="1-based row number, row id, or JSON object")
    sp.add_argument("--out", help="also write the case plot as SVG")
    sp.add_argument("--staircase", action="store_true")
    plot_args(sp)

    sp = sub.add_parser("cor", help="write the prediction-term correlation display as SVG")
    model_args(sp)
    sp.add_argument("--out", required=True, help="SVG file ('-' for standard output)")
    sp.add_argument("--sort-by-stdev", type=_bool, default=True, metavar="true|false")
    sp.add_argument("--abs", action="store_true", help="show absolute correlations")
    sp.add_argument("--cell-area", choices=CELL_AREAS, default="variance")
    sp.add_argument("--classic", action="store_true", help="equal cell sizes")
    sp.add_argument("--title", default="")
    return p


def _load_style() -> Style:
    path = os.environ.get(STYLE_ENV)
    if not path:
        return Style()
    try:
        with open(path, encoding="utf-8") as fh:
            return Style.from_json(fh.read())
    except (OSError, ValueError) as exc:
        raise UsageError(STYLE_ENV, str(exc)) from None


def _categoricals(args) -> dict[str, ColumnKind]:
    out = {}
    for item in args.categorical:
        for name in item.split(","):
            if name.strip():
                out[name.strip()] = ColumnKind.CATEGORICAL
    return out


def _read_data(args, model: FittedModel | None = None) -> Dataset:
    if len(args.delimiter) != 1:
        raise UsageError("--delimiter", "must be a single character")
    kinds = _categoricals(args)
    if model is not None:
        # numeric-looking factor columns must be read back as factors
        header = _header_names(args.data, args.delimiter)
        for c, (k, _) in _model_columns(model).items():
            if k is ColumnKind.CATEGORICAL and c in header:
                kinds.setdefault(c, k)
    try:
        return read_csv(args.data, delimiter=args.delimiter, id_column=args.id_col, kinds=kinds)
    except OSError as exc:
        raise UsageError("--data", exc.strerror or str(exc)) from None


def _header_names(path: str, delimiter: str) -> list[str]:
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            return next(csv.reader(fh, delimiter=delimiter), [])
    except OSError as exc:
        raise UsageError("--data", exc.strerror or str(exc)) from None


def _read_model(args) -> FittedModel:
    try:
        with open(args.model, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError("--model", exc.strerror or str(exc)) from None
    return load_model(text)


def _training_rows(ds: Dataset, m: FittedModel) -> tuple[Dataset, np.ndarray]:
    """Rows usable by the model and their positions in the file.

    When the file has the response column, rows missing it are left out too,
    so the training file gives back exactly the rows the model was fit on.
    """
    needed = m.input_columns
    absent = [c for c in needed if c not in ds]
    if absent:
        raise DataError(f"data lacks model column(s): {', '.join(absent)}")
    keep = np.ones(ds.n_rows, dtype=bool)
    for c in needed + ([m.response.column] if m.response.column in ds else []):
        keep &= ~ds[c].missing
    rows = np.flatnonzero(keep)
    dropped = ds.n_rows - rows.size
    if dropped:
        warnings.warn(f"{dropped} incomplete row(s) left out", stacklevel=2)
    if rows.size == 0:
        raise DataError("no complete cases")
    return (ds if dropped == 0 else ds.take(rows)), rows


def _select_case(text: str, m: FittedModel, ds: Dataset, rows: np.ndarray):
    """Case selector to a 0-based position in the usable rows, or a record."""
    s = text.strip()
    if s.startswith("{"):
        try:
            return parse_case_json(s, m)
        except CaseError as exc:
            raise UsageError("--case", str(exc)) from None
    if s.isdigit():
        k = int(s)
        if k < 1:
            raise UsageError("--case", "row numbers start at 1")
        pos = np.searchsorted(rows, k - 1)
        if pos >= rows.size or rows[pos] != k - 1:
            raise UsageError("--case", f"row {k} is out of range or incomplete")
        return int(pos)
    if ds.row_ids is None:
        raise UsageError("--case", f"{s!r} is neither a row number nor JSON, and no --id-col was given")
    try:
        return ds.find_row(s)
    except PredTermsError as exc:
        raise UsageError("--case", str(exc)) from None


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError("--out", exc.strerror or str(exc)) from None


def _display(args, colors: Style) -> DisplayStyle:
    return DisplayStyle(
        display=args.display,
        bandwidth=args.bandwidth,
        max_terms=args.max_terms,
        full_total_axis=args.full_total_axis,
        title=args.title,
        colors=colors,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_fit(args, out) -> None:
    ds = _read_data(args)
    try:
        m, dropped = fit(ds, args.formula, args.family)
    except FormulaError as exc:
        raise UsageError("--formula", str(exc)) from None
    if dropped:
        warnings.warn(f"{dropped} incomplete row(s) dropped before fitting", stacklevel=2)
    text = save_model(m)
    if args.out:
        _write(args.out, text)
    terms = " + ".join(m.term_names)
    out.write(f"model: {m.response} ~ {terms}\n")
    out.write(f"family: {m.family} ({m.link.value} link)\n")
    out.write(f"rows used: {m.n_train}\n")
    if m.family == "binomial":
        state = "converged" if m.converged else "did not converge"
        out.write(f"IRLS {state} after {m.iterations} iteration(s); deviance {m.deviance!r}\n")
    width = max(len("(Intercept)"), *(len(n) for n in m.column_names))
    out.write("coefficients:\n")
    out.write(f"  {'(Intercept)':<{width}}  {m.intercept!r}\n")
    for name, b in zip(m.column_names, m.coefficients):
        out.write(f"  {name:<{width}}  {float(b)!r}\n")
    out.write(f"centercept: {m.centercept!r}\n")


def _prepare(args):
    m = _read_model(args)
    ds = _read_data(args, m)
    data, rows = _training_rows(ds, m)
    return m, data, rows, compute_terms(m, data)


def _cmd_terms(args, out) -> None:
    m, data, _, pt = _prepare(args)
    out.write(print_term_table(pt))
    out.write("display order: " + ", ".join(pt.names[j] for j in order_terms(pt)) + "\n")


def _case_scene(args, m, data, rows, pt, style):
    sel = _select_case(args.case, m, data, rows)
    ce = explain_case(m, pt, sel, data)
    layout = layout_staircase if args.staircase else layout_case
    return ce, layout(pt, ce, style, args.profile, model=m, data=data)


def _cmd_plot(args, out) -> None:
    colors = _load_style()
    m, data, rows, pt = _prepare(args)
    style = _display(args, colors)
    if args.case is None:
        if args.staircase or args.profile:
            raise UsageError("--staircase" if args.staircase else "--profile", "needs --case")
        scene = layout_overall(pt, style, model=m, data=data)
    else:
        _, scene = _case_scene(args, m, data, rows, pt, style)
    _write(args.out, render_svg(scene))


def _cmd_explain(args, out) -> None:
    colors = _load_style()
    m, data, rows, pt = _prepare(args)
    ce, scene = _case_scene(args, m, data, rows, pt, _display(args, colors))
    if ce.index is not None:
        label = f" ({ce.label})" if ce.label is not None else ""
        out.write(f"case {int(rows[ce.index]) + 1}{label}\n")
    else:
        out.write("case: supplied record\n")
    out.write(print_case_table(ce))
    if args.out:
        _write(args.out, render_svg(scene))


def _cmd_cor(args, out) -> None:
    colors = _load_style()
    _, _, _, pt = _prepare(args)
    tc = term_covariance(pt)
    scene = layout_predscor(tc, args.sort_by_stdev, args.abs, args.cell_area, args.classic,
                            style=colors, title=args.title)
    _write(args.out, render_svg(scene))


_COMMANDS = {
    "fit": _cmd_fit,
    "terms": _cmd_terms,
    "plot": _cmd_plot,
    "explain": _cmd_explain,
    "cor": _cmd_cor,
}


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"predterms: warning: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _show_warning
        try:
            args = parser.parse_args(argv)
            _COMMANDS[args.command](args, sys.stdout)
        except UsageError as exc:
            print(f"predterms: error: {exc}", file=sys.stderr)
            return 1
        except FormulaError as exc:
            print(f"predterms: error: --formula: {exc}", file=sys.stderr)
            return 1
        except PredTermsError as exc:
            print(f"predterms: error: {exc}", file=sys.stderr)
            return 2
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
