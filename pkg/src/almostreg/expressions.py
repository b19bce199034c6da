"""Tiny arithmetic expression compiler for scenario files.

Supports +, -, *, /, **, unary minus, sin, cos, abs, the constant pi, and
declared variable names. Anything else is rejected up front with the
offending symbol named, so scenario authors get errors at load time rather
than mid-run.
"""
from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

_ALLOWED_CALLS = {"sin": math.sin, "cos": math.cos, "abs": abs}
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.USub, ast.UAdd)


class ExpressionError(ValueError):
    pass


def _validate(node: ast.AST, variables: Sequence[str]) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            raise ExpressionError(
                f"unsupported operator: {type(node.op).__name__}")
        _validate(node.left, variables)
        _validate(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _ALLOWED_UNARY):
            raise ExpressionError(
                f"unsupported operator: {type(node.op).__name__}")
        _validate(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            name = getattr(node.func, "id", type(node.func).__name__)
            raise ExpressionError(f"unknown expression symbol: {name}")
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(
                f"{node.func.id} takes exactly one positional argument")
        _validate(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id != "pi":
            raise ExpressionError(f"unknown expression symbol: {node.id}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(
                f"unsupported constant: {node.value!r}")
    else:
        raise ExpressionError(
            f"unsupported expression element: {type(node).__name__}")


def compile_expression(source: str,
                       variables: Sequence[str] = ("x",)) -> Callable[..., float]:
    """Compile a whitelisted arithmetic expression into a float function.

    The returned callable takes the declared variables as keyword or
    positional arguments in declaration order.
    """
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error in expression: {exc.msg}") from None
    _validate(tree, variables)
    code = compile(tree, "<scenario-expression>", "eval")
    env = {"__builtins__": {}, "pi": math.pi, **_ALLOWED_CALLS}
    names = tuple(variables)

    def fn(*args: float, **kwargs: float) -> float:
        scope = dict(zip(names, args))
        scope.update(kwargs)
        missing = [n for n in names if n not in scope]
        if missing:
            raise ExpressionError(f"missing variable value: {missing[0]}")
        return float(eval(code, env, scope))

    return fn
