from __future__ import annotations

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from predterms.data import ColumnKind
from predterms.errors import FormulaError, FormulaSyntaxError
from predterms.formula import (
    Factor,
    FormulaAST,
    ResponseSpec,
    TermKind,
    TermNode,
    bind_schema,
    build_plan,
    parse_formula,
)

SCHEMA = {
    "y": ColumnKind.NUMERIC,
    "x": ColumnKind.NUMERIC,
    "z": ColumnKind.NUMERIC,
    "g": ColumnKind.CATEGORICAL,
    "flag": ColumnKind.LOGICAL,
    "name": ColumnKind.CHARACTER,
}


def test_parse_simple():
    ast = parse_formula("hp ~ topspeed + length + displ")
    assert ast.response == ResponseSpec("hp")
    assert [t.name for t in ast.terms] == ["topspeed", "length", "displ"]


def test_parse_transforms_and_interaction():
    ast = parse_formula("1/MPG~log(weight)+accel:torque")
    assert ast.response == ResponseSpec("MPG", "reciprocal")
    assert ast.terms[0].factors == (Factor("weight", "log"),)
    assert ast.terms[1].name == "accel:torque"
    assert str(ast) == "1/MPG ~ log(weight) + accel:torque"


def test_log_as_plain_identifier():
    ast = parse_formula("log ~ log + log(x)")
    assert ast.response.column == "log"
    assert [str(t) for t in ast.terms] == ["log", "log(x)"]


def test_dotted_and_underscored_names():
    ast = parse_formula("y.1 ~ .a + b_c")
    assert ast.response.column == "y.1"


@pytest.mark.parametrize(
    "text, offset, expected",
    [
        ("y ~ ", 4, ("identifier",)),
        ("y x", 2, ("'~'",)),
        ("~ x", 0, ("'1'", "identifier")),
        ("y ~ a +", 7, ("identifier",)),
        ("y ~ a b", 6, ("'+'", "':'", "end of input")),
        ("2/y ~ a", 0, ("'1'", "identifier")),
        ("y ~ log(a", 9, ("')'",)),
        ("y ~ a$", 5, ("identifier", "'1'", "'~'", "'+'", "':'", "'('", "')'", "'/'")),
    ],
)
def test_syntax_errors(text, offset, expected):
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula(text)
    assert info.value.offset == offset
    assert info.value.expected == tuple(sorted(expected))


def test_offset_is_in_bytes():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("é ~ a")
    assert info.value.offset == 0
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("y ~ é")
    assert info.value.offset == 4
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("y ~ a + é é")
    assert info.value.offset == 8


def test_empty_formula():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("   ")


def test_duplicate_and_self_interaction():
    with pytest.raises(FormulaError, match="duplicate"):
        parse_formula("y ~ a:b + b:a")
    with pytest.raises(FormulaError, match="duplicate"):
        parse_formula("y ~ a + a")
    with pytest.raises(FormulaError, match="same variable"):
        parse_formula("y ~ a:a")
    # different transforms are different terms
    parse_formula("y ~ a + log(a)")


def test_bind_kinds():
    plan = build_plan("y ~ x + g + flag + name + x:g + x:z", SCHEMA)
    kinds = [t.kind for t in plan.terms]
    assert kinds == [
        TermKind.MAIN_NUMERIC, TermKind.MAIN_CATEGORICAL, TermKind.MAIN_CATEGORICAL,
        TermKind.MAIN_CATEGORICAL, TermKind.INTERACTION, TermKind.INTERACTION,
    ]
    assert plan.columns == ["y", "x", "g", "flag", "name", "z"]


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("y ~ nope", "unknown column"),
        ("nope ~ x", "unknown column"),
        ("y ~ y", "response"),
        ("y ~ log(g)", "log"),
        ("g ~ x", "categorical"),
        ("log(flag) ~ x", "logical"),
    ],
)
def test_bind_errors(text, fragment):
    with pytest.raises(FormulaError, match=fragment):
        build_plan(text, SCHEMA)


def test_bind_with_levels():
    plan = bind_schema(parse_formula("y ~ g"), SCHEMA, {"g": ["b", "a"]})
    assert plan.terms[0].levels == (("b", "a"),)


# --- properties ------------------------------------------------------------

idents = st.from_regex(r"[A-Za-z_.][A-Za-z0-9_.]{0,6}", fullmatch=True)
factors = st.builds(Factor, idents, st.sampled_from([None, "log"]))
terms = st.one_of(
    st.builds(lambda f: TermNode((f,)), factors),
    st.builds(lambda a, b: TermNode((a, b)), factors, factors),
)
responses = st.builds(ResponseSpec, idents, st.sampled_from([None, "log", "reciprocal"]))


@given(responses, st.lists(terms, min_size=1, max_size=6))
def test_round_trip(resp, term_list):
    keys = [frozenset(t.factors) for t in term_list]
    assume(len(set(keys)) == len(keys))
    assume(all(len(t.factors) == 1 or t.factors[0].column != t.factors[1].column for t in term_list))
    ast = FormulaAST(resp, tuple(term_list))
    assert parse_formula(str(ast)) == ast
    # whitespace-insensitive
    assert parse_formula(str(ast).replace(" ", "")) == ast


@given(st.text(alphabet="ab~+:()/1 log.$é", max_size=25))
def test_fuzz_never_crashes(text):
    try:
        parse_formula(text)
    except FormulaSyntaxError as exc:
        assert 0 <= exc.offset <= len(text.encode("utf-8"))
        assert exc.expected
    except FormulaError:
        pass
