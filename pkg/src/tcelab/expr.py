"""Constant expressions for angles and lambda values on the command line.

The grammar is numbers, ``pi``, ``sqrt(...)``, ``+ - * /`` and parentheses,
plus ``thresh(n)``: the smallest lambda whose cap capacity reaches ``n``
for the current ``phi``.  Decimal literals are read as exact rationals, so
an expression whose value is rational comes back as a
:class:`fractions.Fraction`; anything else becomes a float.
"""

from __future__ import annotations

import re
from fractions import Fraction

import sympy
from sympy.parsing.sympy_parser import parse_expr, rationalize, standard_transformations

_ALLOWED = re.compile(r"^[0-9eE.\s+\-*/()]*$")
_NAMES = re.compile(r"\b(pi|sqrt|thresh)\b")
_TRANSFORMS = standard_transformations + (rationalize,)


def symbolic(text: str, phi: sympy.Expr | None = None) -> sympy.Expr:
    text = str(text).strip()
    if not text:
        raise ValueError("empty expression")
    if not _ALLOWED.match(_NAMES.sub("", text)):
        raise ValueError(f"unsupported characters in expression {text!r}")

    def thresh(n):
        if phi is None:
            raise ValueError("thresh(n) needs phi")
        return 1 - 1 / (2 * sympy.Integer(n) * (1 + sympy.cos(phi)) + 1)

    names = {"pi": sympy.pi, "sqrt": sympy.sqrt, "thresh": thresh}
    try:
        value = parse_expr(text, local_dict=names, global_dict={"Integer": sympy.Integer,
                                                                "Float": sympy.Float,
                                                                "Rational": sympy.Rational},
                           transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, NameError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse {text!r}: {exc}") from exc
    value = sympy.nsimplify(value) if value.is_Float else value
    if not value.is_number or value.has(sympy.zoo, sympy.nan):
        raise ValueError(f"{text!r} is not a finite constant")
    return value


def to_scalar(value: sympy.Expr) -> Fraction | float:
    value = sympy.simplify(value)
    if value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    return float(value.evalf(30))


def evaluate(text: str, phi: str | None = None) -> Fraction | float:
    """Value of ``text``; ``phi`` (an expression) is only needed for ``thresh``."""
    return to_scalar(symbolic(text, symbolic(phi) if phi is not None else None))


def cos_of(phi: str) -> Fraction | float:
    """``cos(phi)``, exact when it is rational."""
    return to_scalar(sympy.cos(symbolic(phi)))
