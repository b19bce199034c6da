"""Whitelisted expression compiler: evaluation and rejection paths."""
from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from almostreg.expressions import ExpressionError, compile_expression

finite = st.floats(min_value=-1e6, max_value=1e6,
                   allow_nan=False, allow_infinity=False)


def test_arithmetic_evaluation():
    fn = compile_expression("2 * x + 1")
    assert fn(3.0) == 7.0
    assert compile_expression("x ** 2")(4.0) == 16.0
    assert compile_expression("x / 4")(2.0) == 0.5
    assert compile_expression("-x")(3.0) == -3.0
    assert compile_expression("+x")(3.0) == 3.0


def test_functions_and_pi():
    assert compile_expression("sin(x)")(0.0) == 0.0
    assert compile_expression("cos(x)")(0.0) == 1.0
    assert compile_expression("abs(x)")(-2.0) == 2.0
    assert compile_expression("sin(pi / 2)")(0.0) == pytest.approx(1.0)
    assert compile_expression("pi")(0.0) == math.pi


def test_multiple_variables_positional_and_keyword():
    fn = compile_expression("x - u", ("x", "u"))
    assert fn(3.0, 1.0) == 2.0
    assert fn(u=1.0, x=3.0) == 2.0


def test_missing_variable_value():
    fn = compile_expression("x + u", ("x", "u"))
    with pytest.raises(ExpressionError, match="missing variable value"):
        fn(1.0)


def test_unknown_symbol_named_in_error():
    with pytest.raises(ExpressionError, match="unknown expression symbol: y"):
        compile_expression("x + y")
    with pytest.raises(ExpressionError, match="unknown expression symbol: exp"):
        compile_expression("exp(x)")


def test_builtins_are_unreachable():
    with pytest.raises(ExpressionError, match="unknown expression symbol"):
        compile_expression("__import__('os')")
    with pytest.raises(ExpressionError):
        compile_expression("open('/etc/passwd')")


def test_unsupported_constructs_rejected():
    with pytest.raises(ExpressionError, match="unsupported operator"):
        compile_expression("x % 2")
    with pytest.raises(ExpressionError, match="unsupported"):
        compile_expression("x if x else 0")
    with pytest.raises(ExpressionError, match="unsupported constant"):
        compile_expression("'text'")
    with pytest.raises(ExpressionError, match="syntax error"):
        compile_expression("x +")
    with pytest.raises(ExpressionError, match="exactly one positional"):
        compile_expression("sin(x, x)")
    with pytest.raises(ExpressionError, match="unsupported"):
        compile_expression("[1, 2]")


@given(finite, finite)
def test_sum_matches_python(a, b):
    fn = compile_expression("x + u", ("x", "u"))
    assert fn(a, b) == a + b


@given(finite)
def test_composition_matches_math(a):
    fn = compile_expression("abs(sin(x)) + cos(x) ** 2")
    assert fn(a) == pytest.approx(abs(math.sin(a)) + math.cos(a) ** 2)
