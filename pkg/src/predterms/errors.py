"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PredTermsError(Exception):
    """Base class for every error raised by predterms."""


class FormulaError(PredTermsError):
    """A formula is grammatical but cannot be bound to the data."""


class FormulaSyntaxError(FormulaError):
    """A formula string does not match the grammar.

    Attributes
    ----------
    offset : int
        Byte offset into the formula text where parsing failed.
    expected : tuple of str
        Token kinds that would have been accepted at ``offset``.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class DataError(PredTermsError):
    """Malformed or unusable input data."""


class ModelError(PredTermsError):
    """Fitting failed or a model cannot be applied to a case."""


class SchemaError(ModelError):
    """A saved model document is malformed or has the wrong version."""


class ConvergenceWarning(UserWarning):
    """IRLS stopped at the iteration cap without meeting its tolerance."""


class RenderError(PredTermsError, ValueError):
    """A scene cannot be drawn with the requested geometry."""


class CaseError(DataError):
    """A case record names unknown columns, lacks required ones, or uses an unseen level."""
