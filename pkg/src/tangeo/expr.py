"""Small arithmetic expression language for scenario files.

Expressions are parsed with :mod:`ast` and only a whitelist of node types is
accepted: numbers, the declared variables, ``+ - * / **``, unary minus and
calls to a handful of elementary functions. The tree is turned into a sympy
expression so that derivatives come out symbolically.
"""

from __future__ import annotations

import ast
from typing import Callable, Iterable

import sympy as sp

from .gnatural import ScalarFn

FUNCTIONS = {
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "atan": sp.atan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "pow": lambda a, b: a**b,
}
CONSTANTS = {"pi": sp.pi, "e": sp.E}


class ParseError(ValueError):
    def __init__(self, message: str, source: str, col: int | None = None, where: str = ""):
        loc = f" at column {col + 1}" if col is not None else ""
        ctx = f" in {where}" if where else ""
        super().__init__(f"{message}{loc}{ctx}: {source!r}")
        self.source = source
        self.col = col
        self.where = where


def parse(source: str, variables: Iterable[str], where: str = "") -> sp.Expr:
    if not isinstance(source, (str, int, float)) or isinstance(source, bool):
        raise ParseError("expression must be a string or number", repr(source), where=where)
    text = str(source)
    text = text.strip()
    if not text:
        raise ParseError("empty expression", text, 0, where)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        # offset 0 means the input ended early
        col = exc.offset - 1 if exc.offset else len(text)
        raise ParseError(f"syntax error ({exc.msg})", text, col, where) from None
    syms = {v: sp.Symbol(v, real=True) for v in variables}

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return sp.Float(node.value) if isinstance(node.value, float) else sp.Integer(node.value)
        if isinstance(node, ast.Name):
            if node.id in syms:
                return syms[node.id]
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            raise ParseError(f"unknown name {node.id!r}", text, node.col_offset, where)
        if isinstance(node, ast.BinOp):
            a, b = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a / b
            if isinstance(node.op, ast.Pow):
                return a**b
            raise ParseError(f"operator {type(node.op).__name__} not allowed", text, node.col_offset, where)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            a = walk(node.operand)
            return -a if isinstance(node.op, ast.USub) else a
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ParseError("unknown function", text, node.col_offset, where)
            if node.keywords:
                raise ParseError("keyword arguments not allowed", text, node.col_offset, where)
            args = [walk(a) for a in node.args]
            want = 2 if node.func.id == "pow" else 1
            if len(args) != want:
                raise ParseError(f"{node.func.id} takes {want} argument(s)", text, node.col_offset, where)
            return FUNCTIONS[node.func.id](*args)
        col = getattr(node, "col_offset", None)
        raise ParseError(f"{type(node).__name__} not allowed", text, col, where)

    return walk(tree)


def _lambdify(expr: sp.Expr, syms) -> Callable:
    f = sp.lambdify(syms, expr, modules="numpy")
    if not expr.free_symbols:
        c = float(expr)
        # keep dual / array dtype of the argument
        return lambda *a: c + 0 * a[0]
    return f


def scalar_fn(source, where: str = "") -> ScalarFn:
    """ScalarFn of t with a symbolically derived derivative."""
    expr = parse(source, ["t"], where)
    t = sp.Symbol("t", real=True)
    return ScalarFn(_lambdify(expr, [t]), _lambdify(sp.diff(expr, t), [t]), str(expr))


def coordinate_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def coordinate_fn(source, n: int, where: str = "") -> Callable:
    """Function of the chart coordinates x1..xn taking an n-array."""
    names = coordinate_names(n)
    expr = parse(source, names, where)
    f = _lambdify(expr, [sp.Symbol(v, real=True) for v in names])
    return lambda x: f(*[x[i] for i in range(n)])
