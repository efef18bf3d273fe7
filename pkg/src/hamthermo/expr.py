"""Small arithmetic expression language for process fields.

Grammar: numeric literals, chart variable names, ``+ - * / ^`` (``**`` is
accepted too), unary minus, parentheses, and the functions ``exp`` and
``ln`` (alias ``log``). Expressions compile to closures that accept
floats or dual numbers.
"""

from __future__ import annotations

import ast
import operator
from typing import Callable, Sequence

from . import autodiff as ad

__all__ = ["ExpressionError", "compile_expression"]


class ExpressionError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"exp": ad.exp, "ln": ad.log, "log": ad.log}


def compile_expression(text: str, variables: Sequence[str]) -> Callable[[Sequence], object]:
    """Compile ``text`` into ``f(q)`` where ``q`` is ordered like ``variables``."""
    index = {name: i for i, name in enumerate(variables)}
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def build(node) -> Callable:
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            c = float(node.value)
            return lambda q: c
        if isinstance(node, ast.Name):
            if node.id not in index:
                raise ExpressionError(f"unknown variable {node.id!r} in {text!r}; allowed: {list(variables)}")
            i = index[node.id]
            return lambda q: q[i]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda q: op(left(q), right(q))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda q: -inner(q)
            return inner
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            fn = _FUNCS[node.func.id]
            arg = build(node.args[0])
            return lambda q: fn(arg(q))
        raise ExpressionError(f"unsupported construct {ast.dump(node)[:40]}... in {text!r}")

    return build(tree)
