"""Text syntax for forms and multivector fields.

The scalar grammar is extended with basis tokens and a wedge operator:
``d<name>`` is the 1-form ``dx`` of coordinate ``name``, ``d_<name>`` the
coordinate vector field, and ``^`` wedges (same precedence as ``*``)::

    x1*dx2 ^ dx3 + sin(x1)*dx1^dx2
    x1*d_x2 - d_x1^d_x3
"""

from __future__ import annotations

from typing import Mapping

from .. import expr as E
from ..errors import DegreeMixtureError, ExprSyntaxError, UnknownIdentifierError
from ..exterior import Form, _Field, dvec, dx, wedge
from ..expr import CoordinateSystem, ScalarExpr, _Parser

Value = ScalarExpr | _Field


def _describe(v: Value) -> str:
    if isinstance(v, ScalarExpr):
        return "scalar"
    return f"degree-{v.degree} {'form' if isinstance(v, Form) else 'multivector'}"


class _GeometryAlgebra:
    def __init__(self, coords: CoordinateSystem):
        self.coords = coords

    def _lift(self, v: Value, like: _Field) -> _Field:
        return type(like).scalar(self.coords, v)

    def binary(self, sym, a, b, at):
        scalar_a, scalar_b = isinstance(a, ScalarExpr), isinstance(b, ScalarExpr)
        if sym in "+-":
            if scalar_a and scalar_b:
                return E.add(a, b) if sym == "+" else E.sub(a, b)
            if scalar_a and b.degree == 0:
                a = self._lift(a, b)
            elif scalar_b and a.degree == 0:
                b = self._lift(b, a)
            if (isinstance(a, ScalarExpr) or isinstance(b, ScalarExpr)
                    or type(a) is not type(b) or a.degree != b.degree):
                raise DegreeMixtureError(
                    f"cannot add a {_describe(a)} and a {_describe(b)} (at position {at})")
            return a + b if sym == "+" else a - b
        if sym == "/":
            if not scalar_b:
                raise ExprSyntaxError("only scalars can divide", at)
            return E.div(a, b) if scalar_a else a / b
        # '*' and '^'
        if scalar_a and scalar_b:
            return E.mul(a, b)
        if scalar_a:
            return b.map(lambda c: E.mul(a, c))
        if scalar_b:
            return a * b
        if sym == "*" and a.degree and b.degree:
            raise ExprSyntaxError("use '^' to wedge fields", at)
        if type(a) is not type(b):
            raise DegreeMixtureError(f"cannot wedge a form with a multivector (at position {at})")
        return wedge(a, b)

    def negate(self, a):
        return E.neg(a) if isinstance(a, ScalarExpr) else -a

    def power(self, base, exponent, at):
        if not isinstance(base, ScalarExpr) or not isinstance(exponent, ScalarExpr):
            raise ExprSyntaxError("only scalars can be raised to a power", at)
        if not exponent.is_const:
            raise ExprSyntaxError("exponent must be a numeric constant", at)
        return E.power(base, exponent.data)

    def function(self, name, a, at):
        if not isinstance(a, ScalarExpr):
            raise ExprSyntaxError(f"{name} takes a scalar argument", at)
        return E.apply(name, a)


def parse_geometry(text: str, coords: CoordinateSystem,
                   names: Mapping[str, Value] | None = None) -> Value:
    """Parse a scalar, form or multivector; ``names`` supplies earlier definitions."""
    names = names or {}

    def resolve(name, at):
        if name in coords.names:
            return coords.var(name)
        if name in names:
            return names[name]
        if name.startswith("d_") and name[2:] in coords.names:
            return dvec(coords, coords.index(name[2:]))
        if name.startswith("d") and name[1:] in coords.names:
            return dx(coords, coords.index(name[1:]))
        raise UnknownIdentifierError(name, at)

    return _Parser(text, resolve, geometry=True, algebra=_GeometryAlgebra(coords)).parse()


def parse_field(text: str, coords: CoordinateSystem, names=None) -> _Field:
    """Like :func:`parse_geometry` but scalars become degree-0 forms."""
    v = parse_geometry(text, coords, names)
    return Form.scalar(coords, v) if isinstance(v, ScalarExpr) else v
