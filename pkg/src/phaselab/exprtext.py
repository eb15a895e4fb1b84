"""Prefix text syntax for expression fields.

Grammar (s-expressions, whitespace separated):

    expr := NUMBER | pi
          | (var NAME)
          | (+ expr expr ...) | (- expr expr) | (- expr)
          | (* expr expr ...) | (/ expr expr)
          | (^ expr INTEGER)
          | (sin expr) | (cos expr) | (exp expr) | (digamma expr)

Example: ``(+ (^ (- (var x) (var a)) 2) (^ (sin (/ pi (var m))) 2))``
"""

from __future__ import annotations

import math

from .errors import ExpressionParseError
from .fields import (Add, Const, Cos, Digamma, Div, Exp, ExpressionField, Mul,
                     Neg, Pow, Sin, Sub, Var)

_UNARY = {"sin": Sin, "cos": Cos, "exp": Exp, "digamma": Digamma}


def _tokenize(text):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens, pos):
    if pos >= len(tokens):
        raise ExpressionParseError("unexpected end of expression")
    tok = tokens[pos]
    if tok == ")":
        raise ExpressionParseError("unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    items = []
    pos += 1
    while pos < len(tokens) and tokens[pos] != ")":
        item, pos = _read(tokens, pos)
        items.append(item)
    if pos >= len(tokens):
        raise ExpressionParseError("missing ')'")
    return items, pos + 1


def _build(item, var_index):
    if isinstance(item, str):
        if item == "pi":
            return Const(math.pi)
        try:
            return Const(float(item))
        except ValueError:
            raise ExpressionParseError(
                f"bare symbol {item!r}; variables are written (var {item})")
    if not item:
        raise ExpressionParseError("empty parenthesis")
    head, args = item[0], item[1:]
    if head == "var":
        if len(args) != 1 or not isinstance(args[0], str):
            raise ExpressionParseError("(var NAME) takes exactly one name")
        name = args[0]
        if name not in var_index:
            raise ExpressionParseError(f"unknown variable {name!r}")
        return Var(var_index[name])
    if head == "+":
        if len(args) < 2:
            raise ExpressionParseError("+ needs at least two operands")
        return Add(*[_build(a, var_index) for a in args])
    if head == "-":
        if len(args) == 1:
            return Neg(_build(args[0], var_index))
        if len(args) == 2:
            return Sub(_build(args[0], var_index), _build(args[1], var_index))
        raise ExpressionParseError("- takes one or two operands")
    if head == "*":
        if len(args) < 2:
            raise ExpressionParseError("* needs at least two operands")
        node = _build(args[0], var_index)
        for a in args[1:]:
            node = Mul(node, _build(a, var_index))
        return node
    if head == "/":
        if len(args) != 2:
            raise ExpressionParseError("/ takes exactly two operands")
        return Div(_build(args[0], var_index), _build(args[1], var_index))
    if head == "^":
        if len(args) != 2 or not isinstance(args[1], str):
            raise ExpressionParseError("^ takes an expression and an integer")
        try:
            k = int(args[1])
        except ValueError:
            raise ExpressionParseError(f"exponent {args[1]!r} is not an integer")
        if k < 0:
            raise ExpressionParseError("negative exponents: use (/ 1 expr) instead")
        return Pow(_build(args[0], var_index), k)
    if head in _UNARY:
        if len(args) != 1:
            raise ExpressionParseError(f"{head} takes exactly one operand")
        return _UNARY[head](_build(args[0], var_index))
    raise ExpressionParseError(f"unknown operator {head!r}")


def parse_expression(text, names):
    """Parse prefix text into an expression tree over the given variable order."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExpressionParseError("empty expression")
    item, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ExpressionParseError("trailing tokens after expression")
    var_index = {str(n): i for i, n in enumerate(names)}
    return _build(item, var_index)


def parse_field(text, names, box=None):
    return ExpressionField(parse_expression(text, names), names, box)


def to_text(node, names):
    """Serialise a tree back to prefix text (round-trips through parse)."""
    if isinstance(node, Const):
        if node.value == math.pi:
            return "pi"
        return repr(node.value)
    if isinstance(node, Var):
        return f"(var {names[node.index]})"
    if isinstance(node, Add):
        return "(+ " + " ".join(to_text(t, names) for t in node.terms) + ")"
    if isinstance(node, Sub):
        return f"(- {to_text(node.a, names)} {to_text(node.b, names)})"
    if isinstance(node, Neg):
        return f"(- {to_text(node.a, names)})"
    if isinstance(node, Mul):
        return f"(* {to_text(node.a, names)} {to_text(node.b, names)})"
    if isinstance(node, Div):
        return f"(/ {to_text(node.a, names)} {to_text(node.b, names)})"
    if isinstance(node, Pow):
        return f"(^ {to_text(node.a, names)} {node.exponent})"
    if isinstance(node, Sin):
        return f"(sin {to_text(node.a, names)})"
    if isinstance(node, Cos):
        return f"(cos {to_text(node.a, names)})"
    if isinstance(node, Exp):
        return f"(exp {to_text(node.a, names)})"
    if isinstance(node, Digamma):
        return f"(digamma {to_text(node.a, names)})"
    raise TypeError(f"cannot serialise node {type(node).__name__}")
