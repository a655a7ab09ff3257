"""Centered prediction terms for linear and logistic models, with SVG displays."""

from __future__ import annotations

from .data import ColumnKind, Dataset, complete_cases, read_csv
from .errors import (
    ConvergenceWarning,
    DataError,
    FormulaError,
    FormulaSyntaxError,
    ModelError,
    PredTermsError,
    RenderError,
    SchemaError,
)
from .formula import build_plan, parse_formula
from .model import FittedModel, Link, fit, load_model, save_model
from .predscor import TermCovariance, layout_predscor, term_covariance
from .predsplot import DisplayStyle, layout_case, layout_overall, layout_staircase, render_svg
from .scene import PlotScene, PredscorScene, Style
from .terms import (
    CaseExplanation,
    Direction,
    PredictionTerms,
    compute_terms,
    explain_case,
    print_case_table,
    print_term_table,
)

__all__ = [
    "CaseExplanation", "ColumnKind", "ConvergenceWarning", "DataError", "Dataset",
    "Direction", "DisplayStyle", "FittedModel", "FormulaError", "FormulaSyntaxError",
    "Link", "ModelError", "PlotScene", "PredTermsError", "PredictionTerms", "PredscorScene",
    "RenderError", "SchemaError", "Style", "TermCovariance", "build_plan", "complete_cases",
    "compute_terms", "explain_case", "fit", "layout_case", "layout_overall",
    "layout_predscor", "layout_staircase", "load_model", "parse_formula", "print_case_table",
    "print_term_table", "read_csv", "render_svg", "save_model", "term_covariance",
]
