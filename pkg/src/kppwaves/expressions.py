"""A small arithmetic expression language in one variable ``r``.

Supported: numeric literals, ``r``, ``+ - * /``, ``**`` (power), unary
minus, parentheses and the functions ``sqrt``, ``exp``, ``log``. The
expression is parsed with :mod:`ast` and only whitelisted nodes are
accepted, so nothing outside this grammar can be evaluated.

>>> f = compile_expression("r*(1 - r)")
>>> float(f(0.5))
0.25
"""

from __future__ import annotations

import ast
import operator

import numpy as np

from .errors import ExpressionError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}

_FUNCS = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
}

_OP_SYMBOL = {ast.BitXor: "^", ast.FloorDiv: "//", ast.Mod: "%", ast.MatMult: "@",
              ast.BitAnd: "&", ast.BitOr: "|", ast.LShift: "<<", ast.RShift: ">>"}


class Expression:
    """Compiled expression; call it with a float or an array of ``r`` values."""

    def __init__(self, text: str, fn):
        self.text = text
        self._fn = fn

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._fn(r)
        out = np.asarray(out, dtype=float)
        if out.shape != r.shape:
            out = np.broadcast_to(out, r.shape).copy()
        return out if out.ndim else float(out)

    def __repr__(self):
        return f"Expression({self.text!r})"

    # expressions are compared and pickled by their source text
    def __eq__(self, other):
        return isinstance(other, Expression) and other.text == self.text

    def __hash__(self):
        return hash(self.text)

    def __reduce__(self):
        return (compile_expression, (self.text,))


def _col(node):
    return getattr(node, "col_offset", 0) + 1


def _build(node):
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}", _col(node))
        value = float(node.value)
        return lambda r: value
    if isinstance(node, ast.Name):
        if node.id != "r":
            raise ExpressionError(f"unknown name {node.id!r} (only 'r' is allowed)", _col(node))
        return lambda r: r
    if isinstance(node, ast.UnaryOp):
        inner = _build(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda r: -inner(r)
        if isinstance(node.op, ast.UAdd):
            return inner
        raise ExpressionError("unsupported unary operator", _col(node))
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            sym = _OP_SYMBOL.get(type(node.op), type(node.op).__name__)
            hint = " (use ** for powers)" if sym == "^" else ""
            raise ExpressionError(f"unsupported operator {sym!r}{hint}", _col(node))
        left, right = _build(node.left), _build(node.right)
        return lambda r: op(left(r), right(r))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("only sqrt, exp and log may be called", _col(node))
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument", _col(node))
        fn = _FUNCS[node.func.id]
        arg = _build(node.args[0])
        return lambda r: fn(arg(r))
    raise ExpressionError(f"unsupported syntax: {type(node).__name__}", _col(node))


def compile_expression(text: str) -> Expression:
    """Parse ``text`` and return a vectorised callable of ``r``.

    Raises
    ------
    ExpressionError
        On a syntax error or any construct outside the grammar. The
        error's ``column`` attribute is 1-based.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression", 1)
    stripped = text.strip()
    lead = len(text) - len(text.lstrip())
    try:
        tree = ast.parse(stripped, mode="eval")
    except SyntaxError as exc:
        col = (exc.offset or 1) + lead
        raise ExpressionError(f"syntax error: {exc.msg}", col) from None
    try:
        fn = _build(tree)
    except ExpressionError as exc:
        if exc.column is not None:
            raise ExpressionError(str(exc).split(": ", 1)[1], exc.column + lead) from None
        raise
    return Expression(stripped, fn)
