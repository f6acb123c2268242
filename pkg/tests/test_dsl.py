import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hsliouville.dsl import (
    MAX_NESTING,
    BinOp,
    Call,
    DslError,
    EvaluationError,
    LexError,
    Neg,
    Num,
    ParseError,
    UnknownVariableError,
    Var,
    evaluate,
    evaluate_grid,
    parse,
    to_source,
    variables,
)

MN = {"m", "n"}


# Examples ------------------------------------------------------------------


def test_variable_node():
    assert parse("n", {"n"}) == Var("n")


def test_division_of_literal_by_product():
    assert parse("1/(m*n)", MN) == BinOp("/", Num(1.0), BinOp("*", Var("m"), Var("n")))


def test_call_with_one_argument():
    e = parse("exp(-0.5*(m+n))", MN)
    assert isinstance(e, Call) and e.func == "exp" and len(e.args) == 1


@pytest.mark.parametrize(
    "src, binds, want",
    [("n", {"n": 7}, 7.0), ("1/(m*n)", {"m": 2, "n": 4}, 0.125), ("n^2 - n", {"n": 3}, 6.0)],
)
def test_evaluation_examples(src, binds, want):
    assert evaluate(parse(src, MN), binds) == want


@pytest.mark.parametrize(
    "src, want",
    [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("2^-1", 0.5),
        ("8/2/2", 2.0),
        ("10-3-2", 5.0),
        ("-n*2", -6.0),
        ("--n", 3.0),
        ("pow(2, 10)", 1024.0),
        ("abs(-n) + sqrt(9)", 6.0),
        ("1.5e1 + .5", 15.5),
        ("log(exp(2))", 2.0),
    ],
)
def test_precedence_and_associativity(src, want):
    assert evaluate(parse(src), n=3) == pytest.approx(want, rel=1e-15)


# Errors --------------------------------------------------------------------


def test_lex_error_offset():
    with pytest.raises(LexError) as info:
        parse("n + $")
    assert info.value.offset == 4


def test_lex_error_byte_offset_after_multibyte():
    with pytest.raises(LexError) as info:
        parse("n+é")
    assert info.value.offset == 2


def test_unclosed_paren_reports_end_offset():
    with pytest.raises(ParseError) as info:
        parse("1/(n")
    assert info.value.offset == 4
    assert "expected ')'" in str(info.value)


@pytest.mark.parametrize("src", ["", "n +", "* n", "(n", "n)", "exp n", "pow(1)", "exp(1, 2)", "foo(1)", "1e400"])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse(src)


def test_unknown_variable_names_offender():
    with pytest.raises(UnknownVariableError) as info:
        parse("n + k", {"n"})
    assert info.value.name == "k" and info.value.offset == 4


def test_nesting_limit():
    deep = "(" * (MAX_NESTING + 5) + "n" + ")" * (MAX_NESTING + 5)
    with pytest.raises(ParseError):
        parse(deep)
    assert parse("(" * 10 + "n" + ")" * 10) == Var("n")


def test_long_chain_is_rejected_without_recursion_error():
    with pytest.raises(ParseError):
        parse("+".join(["n"] * 5000))


@pytest.mark.parametrize(
    "src, binds, fragment",
    [
        ("1/(n-2)", {"n": 2}, "division by zero at (n=2)"),
        ("log(n-1)", {"n": 1}, "at (n=1)"),
        ("sqrt(m-n)", {"m": 1, "n": 3}, "at (m=1, n=3)"),
        ("(-n)^0.5", {"n": 2}, "at (n=2)"),
        ("exp(n)", {"n": 1000}, "overflow"),
        ("0^-1", {}, "zero"),
    ],
)
def test_evaluation_errors_carry_bindings(src, binds, fragment):
    with pytest.raises(EvaluationError) as info:
        evaluate(parse(src, MN), binds)
    assert fragment in str(info.value)


def test_unbound_variable():
    with pytest.raises(EvaluationError):
        evaluate(parse("m*n", MN), n=1)


def test_grid_error_reports_first_bad_index():
    m = np.arange(1, 5)[:, None]
    n = np.arange(1, 5)[None, :]
    with pytest.raises(EvaluationError) as info:
        evaluate_grid(parse("1/(m-n)", MN), m=m, n=n)
    assert info.value.bindings == {"m": 1.0, "n": 1.0}


def test_errors_share_base_class():
    for cls in (LexError, ParseError, UnknownVariableError, EvaluationError):
        assert issubclass(cls, DslError) and issubclass(cls, ValueError)


# Round trip and oracle -----------------------------------------------------

leaves = st.one_of(
    st.sampled_from([Var("m"), Var("n")]),
    st.floats(0.0, 1e6, allow_nan=False).map(Num),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["exp", "log", "sqrt", "abs"]), children),
        st.builds(lambda a, b: Call("pow", (a, b)), children, children),
    )


trees = st.recursive(leaves, _extend, max_leaves=25)


@given(trees)
def test_pretty_print_round_trip(tree):
    assert parse(to_source(tree), MN) == tree


@given(trees)
def test_variables_subset(tree):
    assert variables(tree) <= MN


def _python_text(tree) -> str:
    if isinstance(tree, Num):
        return repr(tree.value)
    if isinstance(tree, Var):
        return tree.name
    if isinstance(tree, Neg):
        return f"(-{_python_text(tree.operand)})"
    if isinstance(tree, BinOp):
        op = "**" if tree.op == "^" else tree.op
        return f"({_python_text(tree.left)} {op} {_python_text(tree.right)})"
    raise AssertionError


small_leaves = st.one_of(st.sampled_from([Var("n")]), st.integers(0, 4).map(float).map(Num))
arith = st.recursive(
    small_leaves,
    lambda c: st.one_of(c.map(Neg), st.builds(BinOp, st.sampled_from("+-*/^"), c, c)),
    max_leaves=8,
)


@given(arith, st.integers(1, 5))
def test_matches_python_arithmetic(tree, n):
    """Fully parenthesized Python evaluation is the precedence oracle."""
    src = to_source(tree)
    try:
        want = eval(_python_text(tree), {"__builtins__": {}}, {"n": float(n)})
    except (ZeroDivisionError, OverflowError):
        with pytest.raises(EvaluationError):
            evaluate(parse(src), n=n)
        return
    if isinstance(want, complex):
        with pytest.raises(EvaluationError):
            evaluate(parse(src), n=n)
        return
    assume(math.isfinite(want))
    got = evaluate(parse(src), n=n)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-300)


@given(arith)
def test_grid_matches_scalar(tree):
    ns = np.arange(1, 7, dtype=float)
    try:
        grid = evaluate_grid(tree, n=ns)
    except EvaluationError:
        bad = 0
        for k in ns:
            try:
                evaluate(tree, n=k)
            except EvaluationError:
                bad += 1
        assert bad > 0
        return
    for k, g in zip(ns, grid):
        s = evaluate(tree, n=k)
        assert g == s or (math.isnan(g) and math.isnan(s)) or g == pytest.approx(s, rel=1e-14)


@given(st.text(max_size=30))
def test_fuzz_never_crashes(text):
    try:
        parse(text, MN)
    except DslError:
        pass
