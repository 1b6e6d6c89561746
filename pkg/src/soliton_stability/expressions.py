"""Safe arithmetic-expression parser evaluating on jets.

Grammar (a strict subset of Python expression syntax, parsed via ``ast``):

* variables: the declared parameter names (``x``, ``y`` by default; ``u1``,
  ``u2``, ... are accepted aliases for charts of any dimension),
* numeric literals and the constants ``pi`` and ``e``,
* binary operators ``+  -  *  /  **`` and unary ``+  -``,
* function calls ``sin  cos  tan  exp  log  sqrt`` with one argument.

Anything else (attribute access, comparisons, names outside the vocabulary)
raises :class:`~soliton_stability.errors.ExpressionError`.  The compiled
callable accepts a sequence of jets (or plain arrays) and evaluates with jet
arithmetic, so expression-defined charts and potentials get exact derivatives.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

from . import jets
from .errors import ExpressionError

__all__ = ["compile_expression"]

_FUNCTIONS = {
    "sin": jets.sin,
    "cos": jets.cos,
    "tan": jets.tan,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def compile_expression(expr: str, var_names: Sequence[str]) -> Callable:
    """Compile ``expr`` into a callable of the named variables.

    The callable takes one positional argument per variable (jets or numbers)
    and returns the evaluated expression.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}: {exc.msg}") from None
    names = list(var_names)
    aliases = {f"u{i + 1}": i for i in range(len(names))}
    aliases.update({name: i for i, name in enumerate(names)})

    def ev(node, args):
        if isinstance(node, ast.Expression):
            return ev(node.body, args)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                return float(node.value)
            raise ExpressionError(f"unsupported literal {node.value!r}")
        if isinstance(node, ast.Name):
            if node.id in aliases:
                return args[aliases[node.id]]
            if node.id in _CONSTANTS:
                return _CONSTANTS[node.id]
            raise ExpressionError(f"unknown name {node.id!r}")
        if isinstance(node, ast.BinOp):
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
            return op(ev(node.left, args), ev(node.right, args))
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -ev(node.operand, args)
            if isinstance(node.op, ast.UAdd):
                return ev(node.operand, args)
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ExpressionError("only sin/cos/tan/exp/log/sqrt calls are allowed")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one positional argument")
            return _FUNCTIONS[node.func.id](ev(node.args[0], args))
        raise ExpressionError(f"unsupported syntax {type(node).__name__}")

    # validate eagerly so configuration errors surface at parse time
    _validate(tree.body, set(aliases) | set(_CONSTANTS))

    def fn(*args):
        if len(args) != len(names):
            raise ExpressionError(f"expected {len(names)} arguments, got {len(args)}")
        return ev(tree, args)

    fn.expression = expr  # type: ignore[attr-defined]
    return fn


def _validate(node, allowed_names):
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in allowed_names:
            raise ExpressionError(f"unknown name {node.id!r}")
        return
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        _validate(node.left, allowed_names)
        _validate(node.right, allowed_names)
        return
    if isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        _validate(node.operand, allowed_names)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError("only sin/cos/tan/exp/log/sqrt calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError("builtin functions take exactly one positional argument")
        _validate(node.args[0], allowed_names)
        return
    raise ExpressionError(f"unsupported syntax {type(node).__name__}")
