"""Model formula mini-language.

Grammar (whitespace-insensitive)::

    formula  := response "~" term ("+" term)*
    response := ident | "log(" ident ")" | "1" "/" ident
    term     := factor (":" factor)?
    factor   := ident | "log(" ident ")"

Identifiers follow R naming: letters, digits, ``_`` and ``.``, not starting
with a digit.  ``log`` is only a function when followed by ``(``.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .data import ColumnKind
from .errors import FormulaError, FormulaSyntaxError

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    column: str
    transform: str | None = None  # None or "log"

    def __str__(self) -> str:
        return f"log({self.column})" if self.transform == "log" else self.column


@dataclass(frozen=True)
class TermNode:
    factors: tuple[Factor, ...]

    @property
    def name(self) -> str:
        return ":".join(str(f) for f in self.factors)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ResponseSpec:
    column: str
    transform: str | None = None  # None, "log" or "reciprocal"

    def __str__(self) -> str:
        if self.transform == "log":
            return f"log({self.column})"
        if self.transform == "reciprocal":
            return f"1/{self.column}"
        return self.column


@dataclass(frozen=True)
class FormulaAST:
    response: ResponseSpec
    terms: tuple[TermNode, ...]

    def __str__(self) -> str:
        return f"{self.response} ~ " + " + ".join(str(t) for t in self.terms)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_.][A-Za-z0-9_.]*)
  | (?P<number>[0-9]+(?:\.[0-9]*)?)
  | (?P<op>[~+:()/])
    """,
    re.VERBOSE,
)

_OP_KIND = {"~": "'~'", "+": "'+'", ":": "':'", "(": "'('", ")": "')'", "/": "'/'"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "number", an _OP_KIND value, or "end"
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(
                f"unexpected character {text[pos]!r}", _byte_offset(text, pos),
                ("identifier", "'1'", "'~'", "'+'", "':'", "'('", "')'", "'/'"),
            )
        kind = m.lastgroup
        if kind != "ws":
            tok_kind = _OP_KIND[m.group()] if kind == "op" else kind
            tokens.append(_Token(tok_kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def _fail(self, expected: Sequence[str]):
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise FormulaSyntaxError(f"unexpected {what}", tok.offset, tuple(expected))

    def _expect(self, kind: str) -> _Token:
        if self.tok.kind != kind:
            self._fail((kind if kind != "ident" else "identifier",))
        tok = self.tok
        self.i += 1
        return tok

    def _is_log_call(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text == "log" and self._peek().kind == "'('"

    def parse(self) -> FormulaAST:
        response = self._response()
        self._expect("'~'")
        terms = [self._term()]
        while self.tok.kind == "'+'":
            self.i += 1
            terms.append(self._term())
        if self.tok.kind != "end":
            self._fail(("'+'", "':'", "end of input"))
        return FormulaAST(response, tuple(terms))

    def _response(self) -> ResponseSpec:
        if self.tok.kind == "number":
            if self.tok.text != "1":
                self._fail(("'1'", "identifier"))
            self.i += 1
            self._expect("'/'")
            return ResponseSpec(self._expect("ident").text, "reciprocal")
        f = self._factor(("identifier", "'1'"))
        return ResponseSpec(f.column, f.transform)

    def _term(self) -> TermNode:
        first = self._factor()
        if self.tok.kind == "':'":
            self.i += 1
            return TermNode((first, self._factor()))
        return TermNode((first,))

    def _factor(self, expected: Sequence[str] = ("identifier",)) -> Factor:
        if self._is_log_call():
            self.i += 2
            name = self._expect("ident").text
            self._expect("')'")
            return Factor(name, "log")
        if self.tok.kind != "ident":
            self._fail(expected)
        name = self.tok.text
        self.i += 1
        return Factor(name)


def parse_formula(text: str) -> FormulaAST:
    """Parse formula text into an AST that keeps the source order of terms.

    Raises
    ------
    FormulaSyntaxError
        Input does not match the grammar; carries the byte offset and the
        set of tokens that were expected there.
    FormulaError
        The same term appears twice (``a:b`` and ``b:a`` count as equal), or
        an interaction pairs a variable with itself.
    """
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula", 0, ("identifier", "'1'"))
    ast = _Parser(text).parse()
    seen: dict[frozenset, str] = {}
    for term in ast.terms:
        if len(term.factors) == 2 and term.factors[0].column == term.factors[1].column:
            raise FormulaError(f"interaction {term.name!r} uses the same variable twice")
        key = frozenset(term.factors)
        if key in seen:
            raise FormulaError(f"duplicate term {term.name!r}")
        seen[key] = term.name
    return ast


# ---------------------------------------------------------------------------
# Binding to a schema
# ---------------------------------------------------------------------------


class TermKind(str, enum.Enum):
    MAIN_NUMERIC = "numeric"
    MAIN_CATEGORICAL = "categorical"
    INTERACTION = "interaction"


@dataclass(frozen=True)
class ModelTerm:
    kind: TermKind
    columns: tuple[str, ...]
    transforms: tuple[str | None, ...]
    column_kinds: tuple[ColumnKind, ...]
    levels: tuple[tuple[str, ...] | None, ...] | None = None

    @property
    def name(self) -> str:
        return ":".join(
            f"log({c})" if t == "log" else c for c, t in zip(self.columns, self.transforms)
        )

    @property
    def is_factor_column(self) -> tuple[bool, ...]:
        return tuple(k.is_factor for k in self.column_kinds)


@dataclass(frozen=True)
class TermPlan:
    response: ResponseSpec
    terms: tuple[ModelTerm, ...]

    @property
    def columns(self) -> list[str]:
        """Every referenced column, response first, without repeats."""
        out = [self.response.column]
        for t in self.terms:
            out.extend(t.columns)
        return list(dict.fromkeys(out))

    @property
    def term_names(self) -> list[str]:
        return [t.name for t in self.terms]


def bind_schema(
    ast: FormulaAST,
    schema: Mapping[str, ColumnKind],
    levels: Mapping[str, Sequence[str]] | None = None,
) -> TermPlan:
    """Resolve formula identifiers against column kinds.

    Logical, character and categorical columns all become factors.  When
    ``levels`` is given, the level lists for the factor columns are stored in
    the plan; otherwise they are taken from the data when the design matrix
    is built.
    """
    resp = ast.response
    if resp.column not in schema:
        raise FormulaError(f"unknown column {resp.column!r} in response")
    rkind = schema[resp.column]
    if rkind in (ColumnKind.CATEGORICAL, ColumnKind.CHARACTER):
        raise FormulaError(f"response {resp.column!r} is categorical")
    if rkind is ColumnKind.LOGICAL and resp.transform is not None:
        raise FormulaError(f"cannot transform logical response {resp.column!r}")

    terms = []
    for node in ast.terms:
        cols, trans, kinds, lvls = [], [], [], []
        for f in node.factors:
            if f.column not in schema:
                raise FormulaError(f"unknown column {f.column!r} in term {node.name!r}")
            if f.column == resp.column:
                raise FormulaError(f"term {node.name!r} uses the response column")
            kind = schema[f.column]
            if f.transform == "log" and kind.is_factor:
                raise FormulaError(f"log() applied to {kind.value} column {f.column!r}")
            cols.append(f.column)
            trans.append(f.transform)
            kinds.append(kind)
            if kind.is_factor and levels is not None and f.column in levels:
                lvls.append(tuple(levels[f.column]))
            else:
                lvls.append(None)
        if len(cols) == 2:
            tkind = TermKind.INTERACTION
        elif kinds[0].is_factor:
            tkind = TermKind.MAIN_CATEGORICAL
        else:
            tkind = TermKind.MAIN_NUMERIC
        has_levels = any(lv is not None for lv in lvls)
        terms.append(
            ModelTerm(tkind, tuple(cols), tuple(trans), tuple(kinds), tuple(lvls) if has_levels else None)
        )
    return TermPlan(resp, tuple(terms))


def build_plan(text: str, schema: Mapping[str, ColumnKind],
               levels: Mapping[str, Sequence[str]] | None = None) -> TermPlan:
    """Shorthand for ``bind_schema(parse_formula(text), schema, levels)``."""
    return bind_schema(parse_formula(text), schema, levels)
