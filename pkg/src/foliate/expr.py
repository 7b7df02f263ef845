"""Symbolic scalar expressions over named coordinates.

Expressions are hash-consed DAG nodes: structurally identical subterms are
the same Python object, so identity comparison is structural equality and
shared subterms are evaluated once.  Construction does light constant folding
and 0/1 identity elimination only; there is no canonical form, so two
expressions that are equal as functions may be different objects.
"""

from __future__ import annotations

import math
import re
import threading
import weakref
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import EvalError, ExprSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class CoordinateSystem:
    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not names:
            raise ValueError("a coordinate system needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate names must be distinct: {names}")
        for name in names:
            if not _IDENT.match(name):
                raise ValueError(f"invalid coordinate name {name!r}")
            if name in FUNCTIONS:
                raise ValueError(f"coordinate name {name!r} shadows a function")
        taken = set(names)
        for name in names:
            for token in ("d" + name, "d_" + name):
                if token in taken:
                    raise ValueError(
                        f"coordinate {token!r} collides with the differential token of {name!r}")
        object.__setattr__(self, "names", names)

    @property
    def dimension(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownIdentifierError(name) from None

    def var(self, name_or_index) -> "ScalarExpr":
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        return var(i, self.names[i])

    def vars(self) -> list["ScalarExpr"]:
        return [var(i, n) for i, n in enumerate(self.names)]


# ---------------------------------------------------------------------------
# nodes

_table: "weakref.WeakValueDictionary[tuple, ScalarExpr]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class ScalarExpr:
    """One interned node.  Build with the module-level constructors."""

    __slots__ = ("op", "args", "data", "_dcache", "__weakref__")

    op: str
    args: tuple["ScalarExpr", ...]

    def __new__(cls, *a, **k):
        raise TypeError("use the constructor functions in foliate.expr")

    @classmethod
    def _intern(cls, op, args=(), data=None):
        key = (op, args, data)
        with _lock:
            node = _table.get(key)
            if node is None:
                node = object.__new__(cls)
                node.op = op
                node.args = args
                node.data = data
                node._dcache = {}
                _table[key] = node
        return node

    # -- inspection
    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self) -> float:
        if self.op != "const":
            raise AttributeError("value is only defined on constants")
        return self.data

    def is_zero(self) -> bool:
        return self.op == "const" and self.data == 0.0

    def is_one(self) -> bool:
        return self.op == "const" and self.data == 1.0

    # -- arithmetic sugar
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        if not isinstance(other, (ScalarExpr, int, float)):
            return NotImplemented
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"ScalarExpr({to_text(self)!r})"



def const(value: float) -> ScalarExpr:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite constant {value}")
    if value == 0.0:
        value = 0.0
    return ScalarExpr._intern("const", (), value)


ZERO = const(0.0)
ONE = const(1.0)


def var(index: int, name: str | None = None) -> ScalarExpr:
    if index < 0:
        raise ValueError("coordinate index must be non-negative")
    return ScalarExpr._intern("var", (), (index, name if name is not None else f"x{index + 1}"))


def as_expr(x) -> ScalarExpr:
    if isinstance(x, ScalarExpr):
        return x
    if isinstance(x, (int, float)):
        return const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a scalar expression")


def _fold(fn, *values):
    try:
        out = fn(*values)
    except (ArithmeticError, ValueError):
        return None
    if isinstance(out, complex) or not math.isfinite(out):
        return None
    return const(out)


def add(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_const and b.is_const:
        return const(a.data + b.data)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return ScalarExpr._intern("add", (a, b))


def sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_const and b.is_const:
        return const(a.data - b.data)
    if b.is_zero():
        return a
    if a.is_zero():
        return neg(b)
    if b.op == "neg":
        return add(a, b.args[0])
    return ScalarExpr._intern("sub", (a, b))


def mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_const and b.is_const:
        return const(a.data * b.data)
    if a.is_zero() or b.is_zero():
        return ZERO
    if a.is_one():
        return b
    if b.is_one():
        return a
    if a.is_const and a.data == -1.0:
        return neg(b)
    if b.is_const and b.data == -1.0:
        return neg(a)
    if a.op == "neg" or b.op == "neg":
        return _pull_signs(mul, a, b)
    return ScalarExpr._intern("mul", (a, b))


def div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_const and b.is_const and b.data != 0.0:
        folded = _fold(lambda x, y: x / y, a.data, b.data)
        if folded is not None:
            return folded
    if a.is_zero():
        return ZERO
    if b.is_one():
        return a
    if b.is_const and b.data == -1.0:
        return neg(a)
    if a.op == "neg" or b.op == "neg":
        return _pull_signs(div, a, b)
    return ScalarExpr._intern("div", (a, b))


def _pull_signs(op, a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    """Move unary minus out of the operands of a product or quotient."""
    flips = 0
    if a.op == "neg":
        a, flips = a.args[0], flips + 1
    if b.op == "neg":
        b, flips = b.args[0], flips + 1
    out = op(a, b)
    return neg(out) if flips % 2 else out


def neg(a: ScalarExpr) -> ScalarExpr:
    if a.is_const:
        return const(-a.data)
    if a.op == "neg":
        return a.args[0]
    return ScalarExpr._intern("neg", (a,))


def _pow_value(base, exponent):
    if base == 0.0 and exponent < 0:
        raise ZeroDivisionError
    if base < 0 and not float(exponent).is_integer():
        raise ValueError
    return base ** exponent


def power(base: ScalarExpr, exponent) -> ScalarExpr:
    if isinstance(exponent, ScalarExpr):
        if not exponent.is_const:
            raise ValueError("exponents must be numeric constants")
        exponent = exponent.data
    exponent = float(exponent)
    if not math.isfinite(exponent):
        raise ValueError("non-finite exponent")
    if exponent == 1.0:
        return base
    if exponent == 0.0:
        return ONE
    if base.is_const:
        folded = _fold(_pow_value, base.data, exponent)
        if folded is not None:
            return folded
    return ScalarExpr._intern("pow", (base,), exponent)


def _ln(x):
    if x <= 0:
        raise ValueError
    return math.log(x)


def _sqrt(x):
    if x < 0:
        raise ValueError
    return math.sqrt(x)


_FUNC_VALUES: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp, "ln": _ln, "sqrt": _sqrt,
}


def apply(fname: str, a: ScalarExpr) -> ScalarExpr:
    if fname not in _FUNC_VALUES:
        raise UnknownIdentifierError(fname)
    if a.is_const:
        folded = _fold(_FUNC_VALUES[fname], a.data)
        if folded is not None:
            return folded
    return ScalarExpr._intern(fname, (a,))


def sin(a):
    return apply("sin", as_expr(a))


def cos(a):
    return apply("cos", as_expr(a))


def exp(a):
    return apply("exp", as_expr(a))


def ln(a):
    return apply("ln", as_expr(a))


def sqrt(a):
    return apply("sqrt", as_expr(a))


def total(terms: Iterable[ScalarExpr]) -> ScalarExpr:
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


# ---------------------------------------------------------------------------
# traversal and differentiation

def topological(*roots: ScalarExpr) -> list[ScalarExpr]:
    """Children-first ordering of every node reachable from ``roots``."""
    order: list[ScalarExpr] = []
    seen: set[int] = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.args):
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def free_indices(e: ScalarExpr) -> set[int]:
    return {n.data[0] for n in topological(e) if n.op == "var"}


def _derivative_rule(node: ScalarExpr, i: int, d) -> ScalarExpr:
    op = node.op
    if op == "const":
        return ZERO
    if op == "var":
        return ONE if node.data[0] == i else ZERO
    if op == "add":
        return add(d(node.args[0]), d(node.args[1]))
    if op == "sub":
        return sub(d(node.args[0]), d(node.args[1]))
    if op == "neg":
        return neg(d(node.args[0]))
    if op == "mul":
        a, b = node.args
        return add(mul(d(a), b), mul(a, d(b)))
    if op == "div":
        a, b = node.args
        return sub(div(d(a), b), div(mul(a, d(b)), power(b, 2)))
    u = node.args[0]
    du = d(u)
    if du.is_zero():
        return ZERO
    if op == "pow":
        n = node.data
        return mul(mul(const(n), power(u, n - 1.0)), du)
    if op == "sin":
        return mul(apply("cos", u), du)
    if op == "cos":
        return mul(neg(apply("sin", u)), du)
    if op == "exp":
        return mul(node, du)
    if op == "ln":
        return div(du, u)
    if op == "sqrt":
        return div(du, mul(const(2.0), node))
    raise AssertionError(f"unhandled node {op}")


def partial(e: ScalarExpr, i: int) -> ScalarExpr:
    """Exact partial derivative with respect to coordinate ``i``."""
    if i < 0:
        raise ValueError("coordinate index must be non-negative")
    cached = e._dcache.get(i)
    if cached is not None:
        return cached
    for node in topological(e):
        if i not in node._dcache:
            node._dcache[i] = _derivative_rule(node, i, lambda c: c._dcache[i])
    return e._dcache[i]


# ---------------------------------------------------------------------------
# pretty printing

def _format_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}


def to_text(e: ScalarExpr) -> str:
    """Render ``e`` in the scalar grammar; ``parse_scalar`` inverts it."""
    memo: dict[int, tuple[str, int]] = {}
    for node in topological(e):
        memo[id(node)] = _render(node, memo)
    return memo[id(e)][0]


def _render(node, memo) -> tuple[str, int]:
    # precedence: 1 sum, 2 product, 3 signed factor, 4 power, 5 atom
    op = node.op
    if op == "const":
        s = _format_number(node.data)
        return s, (3 if node.data < 0 else 5)
    if op == "var":
        return node.data[1], 5
    if op in FUNCTIONS:
        return f"{op}({memo[id(node.args[0])][0]})", 5
    if op in _PREC:
        p = _PREC[op]
        (ls, lp), (rs, rp) = memo[id(node.args[0])], memo[id(node.args[1])]
        if lp < p:
            ls = f"({ls})"
        if rp <= p:
            rs = f"({rs})"
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
        return ls + sym + rs, p
    if op == "neg":
        s, p = memo[id(node.args[0])]
        if p < 5:
            s = f"({s})"
        return "-" + s, 3
    if op == "pow":
        s, p = memo[id(node.args[0])]
        if p not in (3, 5):
            s = f"({s})"
        return f"{s}**{_format_number(node.data)}", 4
    raise AssertionError(op)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/()^]))")


class _Parser:
    """Recursive-descent parser over the shared grammar.

    ``resolve`` maps identifiers to values.  With ``geometry`` set, ``^``
    is the wedge operator and ``combine`` supplies the value algebra.
    """

    def __init__(self, text: str, resolve, geometry: bool = False, algebra=None):
        self.text = text
        self.resolve = resolve
        self.geometry = geometry
        self.alg = algebra or _ScalarAlgebra()
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text):
        out = []
        i = 0
        while True:
            while i < len(text) and text[i].isspace():
                i += 1
            if i >= len(text):
                break
            m = _TOKEN.match(text, i)
            if not m or (m.group("op") == "^" and not self.geometry):
                raise ExprSyntaxError(f"unexpected character {text[i]!r}", i)
            kind = m.lastgroup
            start = m.start(kind)
            out.append((kind, m.group(kind), start))
            i = m.end()
        out.append(("end", "", len(text)))
        return out

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, v, at = self.take()
        if v != value or kind != "op":
            raise ExprSyntaxError(f"unexpected {v or 'end of input'!r}", at, [value])

    def parse(self):
        value = self.expr()
        kind, v, at = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {v!r}", at, ["+", "-", "*", "/", "end of input"])
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, sym, at = self.take()
            rhs = self.term()
            value = self.alg.binary(sym, value, rhs, at)
        return value

    def term(self):
        value = self.factor()
        ops = ("*", "/", "^") if self.geometry else ("*", "/")
        while self.peek()[0] == "op" and self.peek()[1] in ops:
            _, sym, at = self.take()
            rhs = self.factor()
            value = self.alg.binary(sym, value, rhs, at)
        return value

    def factor(self):
        kind, v, at = self.peek()
        negate = kind == "op" and v == "-"
        if negate:
            self.take()
        value = self.atom()
        if negate:
            value = self.alg.negate(value)
        if self.peek()[0] == "op" and self.peek()[1] == "**":
            _, _, pat = self.take()
            exponent = self.factor()
            value = self.alg.power(value, exponent, pat)
        return value

    def atom(self):
        kind, v, at = self.take()
        if kind == "num":
            return const(float(v))
        if kind == "ident":
            if v in FUNCTIONS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return self.alg.function(v, inner, at)
            return self.resolve(v, at)
        if kind == "op" and v == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ExprSyntaxError(f"unexpected {v or 'end of input'!r}", at,
                              ["number", "identifier", "(", "-"] + list(FUNCTIONS))


class _ScalarAlgebra:
    def binary(self, sym, a, b, at):
        return {"+": add, "-": sub, "*": mul, "/": div}[sym](a, b)

    def negate(self, a):
        return neg(a)

    def power(self, base, exponent, at):
        if not exponent.is_const:
            raise ExprSyntaxError("exponent must be a numeric constant", at)
        return power(base, exponent.data)

    def function(self, name, a, at):
        return apply(name, a)


def parse_scalar(text: str, coords: CoordinateSystem) -> ScalarExpr:
    def resolve(name, at):
        if name in coords.names:
            return coords.var(name)
        raise UnknownIdentifierError(name, at)

    return _Parser(text, resolve).parse()


# ---------------------------------------------------------------------------
# evaluation

def eval_scalar(e: ScalarExpr, point: Sequence[float]) -> float:
    """Evaluate at one point; raises EvalError naming the offending subterm."""
    from ._program import compile_roots

    prog = compile_roots([e])
    values, bad, bad_instr = prog.evaluate([list(point)])
    if bad[0]:
        node = prog.nodes[bad_instr[0]]
        raise EvalError(prog.reason(bad_instr[0]), node)
    return float(values[0, 0])


_BINARY_VALUES = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def eval_reference(e: ScalarExpr, point: Sequence[float]) -> float:
    """Node-by-node evaluation with the ``math`` module.

    Independent of the compiled kernels; used to cross-check them.
    """
    vals: dict[int, float] = {}
    for node in topological(e):
        op = node.op
        try:
            if op == "const":
                v = node.data
            elif op == "var":
                v = float(point[node.data[0]])
            elif op == "neg":
                v = -vals[id(node.args[0])]
            elif op == "pow":
                v = _pow_value(vals[id(node.args[0])], node.data)
            elif op in _FUNC_VALUES:
                v = _FUNC_VALUES[op](vals[id(node.args[0])])
            else:
                a, b = vals[id(node.args[0])], vals[id(node.args[1])]
                v = _BINARY_VALUES[op](a, b)
        except (ArithmeticError, ValueError, OverflowError):
            raise EvalError("invalid operation", node) from None
        if isinstance(v, complex) or not math.isfinite(v):
            raise EvalError("non-finite value", node)
        vals[id(node)] = v
    return vals[id(e)]
