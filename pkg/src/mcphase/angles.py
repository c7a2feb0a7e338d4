"""Parse angle expressions such as ``pi/4``, ``-3*pi/4``, ``1.25`` or ``25.2deg``."""

from __future__ import annotations

import ast
import math
import operator

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "π": math.pi}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand))
    raise ValueError("unsupported angle expression")


def parse_angle(text: str) -> float:
    """Return the angle in radians; a trailing ``deg`` marks degrees."""
    s = str(text).strip().replace(" ", "")
    degrees = s.lower().endswith("deg")
    if degrees:
        s = s[:-3]
    if not s:
        raise ValueError(f"empty angle expression: {text!r}")
    try:
        value = _eval(ast.parse(s.replace("π", "pi"), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse angle {text!r}") from exc
    if not math.isfinite(value):
        raise ValueError(f"angle {text!r} is not finite")
    return math.radians(value) if degrees else value


def parse_angle_list(text: str) -> list[float]:
    return [parse_angle(part) for part in text.split(",") if part.strip()]
