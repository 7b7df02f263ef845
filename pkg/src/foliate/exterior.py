"""Differential forms and multivector fields with symbolic coefficients.

Both kinds store coefficients sparsely on strictly increasing multi-indices.
Conventions used throughout:

* pairing is the determinant convention,
  ``(dx^i1 ^ ... ^ dx^iq)(d_j1, ..., d_jq) = det(delta)``, with no ``1/q!``;
* every contraction fills the *first* argument slots:
  ``(i_A beta)(Y...) = beta(A_1, ..., A_p, Y...)`` for ``A = A_1 ^ ... ^ A_p``;
* the Schouten bracket restricts to the Lie bracket on vector fields, to
  ``[X, f] = X(f)`` on functions, and satisfies ``[A, B] = (-1)^(ab) [B, A]``.
"""

from __future__ import annotations

from types import MappingProxyType
from typing import Iterable, Mapping

from . import expr as E
from .errors import DegreeMismatchError, DimensionMismatchError
from .expr import CoordinateSystem, ScalarExpr


def shuffle_sign(first: tuple[int, ...], second: tuple[int, ...]) -> int:
    """Sign of the permutation sorting ``first + second`` (disjoint, each increasing)."""
    inversions = 0
    for i in first:
        for j in second:
            if i > j:
                inversions += 1
    return -1 if inversions % 2 else 1


def _collect(pieces: dict[tuple, list[ScalarExpr]]) -> dict[tuple, ScalarExpr]:
    out = {}
    for key, terms in pieces.items():
        value = E.total(terms)
        if not value.is_zero():
            out[key] = value
    return out


def _signed(sign: int, e: ScalarExpr) -> ScalarExpr:
    return e if sign > 0 else E.neg(e)


class _Field:
    """Common storage of forms and multivectors (immutable)."""

    __slots__ = ("coords", "degree", "_coeffs")
    kind = "field"

    def __init__(self, coords: CoordinateSystem, degree: int,
                 coeffs: Mapping[tuple[int, ...], ScalarExpr | float] | None = None):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        m = coords.dimension
        clean: dict[tuple[int, ...], ScalarExpr] = {}
        for key, value in (coeffs or {}).items():
            key = tuple(key)
            if len(key) != degree:
                raise DegreeMismatchError(f"index {key} does not have length {degree}")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"index {key} is not strictly increasing")
            if key and (key[0] < 0 or key[-1] >= m):
                raise DimensionMismatchError(f"index {key} out of range for dimension {m}")
            value = E.as_expr(value)
            if not value.is_zero():
                clean[key] = value
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "_coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def coeffs(self) -> Mapping[tuple[int, ...], ScalarExpr]:
        return MappingProxyType(self._coeffs)

    @property
    def dimension(self) -> int:
        return self.coords.dimension

    def __getitem__(self, key) -> ScalarExpr:
        if isinstance(key, int):
            key = (key,)
        return self._coeffs.get(tuple(key), E.ZERO)

    def is_zero(self) -> bool:
        """Structural emptiness only; semantic zero needs sampling."""
        return not self._coeffs

    @classmethod
    def zero(cls, coords, degree):
        return cls(coords, degree)

    @classmethod
    def scalar(cls, coords, f):
        return cls(coords, 0, {(): f})

    @classmethod
    def basis(cls, coords, *indices: int):
        order = tuple(sorted(indices))
        if len(set(order)) != len(order):
            return cls(coords, len(order))
        perm_sign = _permutation_sign(indices)
        return cls(coords, len(order), {order: float(perm_sign)})

    @classmethod
    def from_components(cls, coords, components: Iterable[ScalarExpr | float]):
        """Degree-1 field from its m components."""
        comps = list(components)
        if len(comps) != coords.dimension:
            raise DimensionMismatchError("need one component per coordinate")
        return cls(coords, 1, {(i,): c for i, c in enumerate(comps)})

    def components(self) -> list[ScalarExpr]:
        if self.degree != 1:
            raise DegreeMismatchError("components() is defined on degree-1 fields")
        return [self[(i,)] for i in range(self.dimension)]

    def scalar_part(self) -> ScalarExpr:
        if self.degree != 0:
            raise DegreeMismatchError("not a degree-0 field")
        return self[()]

    def map(self, fn) -> "_Field":
        return type(self)(self.coords, self.degree, {k: fn(v) for k, v in self._coeffs.items()})

    def _check_same(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.coords != self.coords:
            raise DimensionMismatchError("fields live on different coordinate systems")
        if other.degree != self.degree:
            raise DegreeMismatchError(
                f"cannot add degree {self.degree} and degree {other.degree}")

    def __add__(self, other):
        if not isinstance(other, _Field):
            return NotImplemented
        self._check_same(other)
        pieces: dict[tuple, list] = {}
        for src in (self, other):
            for k, v in src._coeffs.items():
                pieces.setdefault(k, []).append(v)
        return type(self)(self.coords, self.degree, _collect(pieces))

    def __sub__(self, other):
        if not isinstance(other, _Field):
            return NotImplemented
        self._check_same(other)
        keys = list(self._coeffs) + [k for k in other._coeffs if k not in self._coeffs]
        return type(self)(self.coords, self.degree,
                          {k: E.sub(self[k], other[k]) for k in keys})

    def __neg__(self):
        return self.map(E.neg)

    def __mul__(self, s):
        if isinstance(s, _Field):
            return NotImplemented
        s = E.as_expr(s)
        return self.map(lambda v: E.mul(v, s))

    def __rmul__(self, s):
        if isinstance(s, _Field):
            return NotImplemented
        s = E.as_expr(s)
        return self.map(lambda v: E.mul(s, v))

    def __truediv__(self, s):
        s = E.as_expr(s)
        return self.map(lambda v: E.div(v, s))

    def __repr__(self):
        return f"{type(self).__name__}({to_text(self)!r})"

    def __str__(self):
        return to_text(self)


def _permutation_sign(seq) -> int:
    seq = list(seq)
    inversions = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return -1 if inversions % 2 else 1


class Form(_Field):
    """Covariant antisymmetric field: sum of ``c_I dx^I``."""

    __slots__ = ()
    kind = "form"


class Multivector(_Field):
    """Contravariant antisymmetric field: sum of ``c_I d_I``."""

    __slots__ = ()
    kind = "multivector"


def to_text(t: _Field) -> str:
    """Render in the geometry DSL (``dx1^dx2`` / ``d_x1^d_x2``)."""
    if t.is_zero():
        return "0"
    names = t.coords.names
    prefix = "d" if isinstance(t, Form) else "d_"
    parts = []
    for key in sorted(t._coeffs):
        coeff = E.to_text(t._coeffs[key])
        basis = "^".join(prefix + names[i] for i in key)
        if not key:
            parts.append(f"({coeff})")
        elif t._coeffs[key].is_one():
            parts.append(basis)
        else:
            parts.append(f"({coeff})*{basis}")
    return " + ".join(parts)


def dx(coords: CoordinateSystem, *indices: int) -> Form:
    return Form.basis(coords, *indices)


def dvec(coords: CoordinateSystem, *indices: int) -> Multivector:
    return Multivector.basis(coords, *indices)


def gradient(f: ScalarExpr, coords: CoordinateSystem) -> Form:
    return Form(coords, 1, {(i,): E.partial(f, i) for i in range(coords.dimension)})


# ---------------------------------------------------------------------------
# algebra

def wedge(a: _Field, b: _Field) -> _Field:
    if type(a) is not type(b):
        raise TypeError("wedge needs two forms or two multivectors")
    if a.coords != b.coords:
        raise DimensionMismatchError("fields live on different coordinate systems")
    degree = a.degree + b.degree
    pieces: dict[tuple, list] = {}
    if degree <= a.dimension:
        for I, ai in a._coeffs.items():
            for J, bj in b._coeffs.items():
                if set(I) & set(J):
                    continue
                K = tuple(sorted(I + J))
                pieces.setdefault(K, []).append(_signed(shuffle_sign(I, J), E.mul(ai, bj)))
    return type(a)(a.coords, degree, _collect(pieces))


def wedge_all(fields: Iterable[_Field], coords: CoordinateSystem | None = None,
              cls=Form) -> _Field:
    """Ordered wedge of a sequence; the empty product is the constant 1."""
    out = None
    for f in fields:
        out = f if out is None else wedge(out, f)
    if out is None:
        if coords is None:
            raise ValueError("empty product needs coordinates")
        return cls.scalar(coords, E.ONE)
    return out


def wedge_power(omega: Form, r: int) -> Form:
    return wedge_all([omega] * r, omega.coords, type(omega))


def exterior_derivative(beta: Form) -> Form:
    if not isinstance(beta, Form):
        raise TypeError("exterior derivative acts on forms")
    m = beta.dimension
    pieces: dict[tuple, list] = {}
    if beta.degree < m:
        for I, c in beta._coeffs.items():
            for j in range(m):
                if j in I:
                    continue
                dc = E.partial(c, j)
                if dc.is_zero():
                    continue
                below = sum(1 for i in I if i < j)
                K = tuple(sorted(I + (j,)))
                pieces.setdefault(K, []).append(_signed(-1 if below % 2 else 1, dc))
    return Form(beta.coords, beta.degree + 1, _collect(pieces))


d = exterior_derivative


def contract_first(t: _Field, v: _Field) -> _Field:
    """Insert the degree-1 field ``v`` of opposite variance into the first slot of ``t``."""
    if v.degree != 1 or type(v) is type(t):
        raise DegreeMismatchError("contract_first needs a degree-1 field of opposite variance")
    if t.coords != v.coords:
        raise DimensionMismatchError("fields live on different coordinate systems")
    if t.degree == 0:
        return type(t)(t.coords, 0)
    pieces: dict[tuple, list] = {}
    for I, c in t._coeffs.items():
        for p, j in enumerate(I):
            vj = v._coeffs.get((j,))
            if vj is None:
                continue
            rest = I[:p] + I[p + 1:]
            pieces.setdefault(rest, []).append(_signed(-1 if p % 2 else 1, E.mul(vj, c)))
    return type(t)(t.coords, t.degree - 1, _collect(pieces))


def pair(t: _Field, *args: _Field) -> ScalarExpr:
    """Evaluate a q-form on q vector fields (or a q-vector on q 1-forms)."""
    if len(args) != t.degree:
        raise DegreeMismatchError(f"degree {t.degree} field takes {t.degree} arguments, got {len(args)}")
    out = t
    for a in args:
        out = contract_first(out, a)
    return out[()]


def interior(A: Multivector, beta: Form) -> Form:
    """``i_A beta`` with the factors of ``A`` filling the first slots of ``beta``."""
    if not isinstance(A, Multivector) or not isinstance(beta, Form):
        raise TypeError("interior(A, beta) needs a multivector and a form")
    if A.coords != beta.coords:
        raise DimensionMismatchError("fields live on different coordinate systems")
    p, q = A.degree, beta.degree
    if p > q:
        return Form(beta.coords, 0)
    pieces: dict[tuple, list] = {}
    for J, a in A._coeffs.items():
        js = set(J)
        for I, b in beta._coeffs.items():
            if not js.issubset(I):
                continue
            rest = tuple(i for i in I if i not in js)
            sign = shuffle_sign(J, rest)
            pieces.setdefault(rest, []).append(_signed(sign, E.mul(a, b)))
    return Form(beta.coords, q - p, _collect(pieces))


def lie_derivative(X: Multivector, beta: Form) -> Form:
    """Cartan formula ``L_X beta = i_X d beta + d i_X beta``."""
    if X.degree != 1:
        raise DegreeMismatchError("Lie derivative along a vector field")
    first = interior(X, exterior_derivative(beta)) if beta.degree < beta.dimension else None
    second = exterior_derivative(interior(X, beta)) if beta.degree >= 1 else None
    if first is None and second is None:
        return Form(beta.coords, beta.degree)
    if first is None:
        return second
    if second is None:
        return first
    return first + second


def apply_vector(X: Multivector, f: ScalarExpr) -> ScalarExpr:
    """Directional derivative ``X(f)``."""
    return E.total(E.mul(c, E.partial(f, I[0])) for I, c in X._coeffs.items())


def sharp(P: Multivector, eta: Form) -> Multivector:
    """``P^#(eta)``, i.e. ``beta(P^#(eta)) = P(eta, beta)``."""
    return contract_first(P, eta)


# ---------------------------------------------------------------------------
# Schouten bracket

def _xi_right_derivative(A: Multivector, i: int) -> Multivector:
    a = A.degree
    out = {}
    for I, c in A._coeffs.items():
        if i in I:
            p = I.index(i)
            out[I[:p] + I[p + 1:]] = _signed(-1 if (a - 1 - p) % 2 else 1, c)
    return Multivector(A.coords, a - 1, out)


def _coeff_partial(A: Multivector, i: int) -> Multivector:
    return A.map(lambda c: E.partial(c, i))


def _schouten_odd(A: Multivector, B: Multivector) -> Multivector:
    """Bracket from the odd-variable formula, before the degree sign."""
    a, b = A.degree, B.degree
    coords = A.coords
    out = Multivector(coords, a + b - 1)
    sign = -1 if ((a - 1) * (b - 1)) % 2 else 1
    for i in range(coords.dimension):
        if a > 0:
            Ra = _xi_right_derivative(A, i)
            if not Ra.is_zero():
                out = out + wedge(Ra, _coeff_partial(B, i))
        if b > 0:
            Rb = _xi_right_derivative(B, i)
            if not Rb.is_zero():
                term = wedge(Rb, _coeff_partial(A, i))
                out = out - term if sign > 0 else out + term
    return out


def schouten(A: Multivector, B: Multivector) -> Multivector:
    """Schouten bracket of an a-vector and a b-vector; result degree a+b-1.

    Evaluated as ``(-1)^(a+1)`` times the odd-variable expression
    ``sum_i dA/dxi_i * dB/dx_i - (-1)^((a-1)(b-1)) dB/dxi_i * dA/dx_i``
    (right derivatives in the odd variables).  With this sign the bracket is
    the Lie bracket on vector fields, ``[X, f] = X(f)``, ``[P, f] = P^#(df)``
    for bivectors, ``[A, B] = (-1)^(ab) [B, A]``, and

        D(A^B) = (-1)^b D(A)^B + A^D(B) + (-1)^(a+b+1) [A, B]

    for the trace operator ``D`` of any volume form.
    """
    if not isinstance(A, Multivector) or not isinstance(B, Multivector):
        raise TypeError("schouten needs two multivectors")
    if A.coords != B.coords:
        raise DimensionMismatchError("fields live on different coordinate systems")
    a, b = A.degree, B.degree
    if a + b - 1 < 0:
        return Multivector(A.coords, 0)
    if a + b - 1 > A.dimension:
        return Multivector(A.coords, a + b - 1)
    raw = _schouten_odd(A, B)
    return raw if a % 2 else -raw


# ---------------------------------------------------------------------------
# volume forms and the trace operator

class VolumeForm:
    """Top-degree form ``f dx^1 ^ ... ^ dx^m`` with ``f`` nonvanishing at samples."""

    __slots__ = ("form", "box")

    def __init__(self, form: Form, box=None, points: int = 64, seed: int = 42):
        if not isinstance(form, Form) or form.degree != form.dimension:
            raise DegreeMismatchError("a volume form has top degree")
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "box", box)
        if box is not None:
            from .verify import check_nonvanishing
            res = check_nonvanishing(self.density, box, n=points, seed=seed)
            if res.status != "PASS":
                raise ValueError(f"volume density vanishes on the box ({res.status})")

    def __setattr__(self, name, value):
        raise AttributeError("VolumeForm is immutable")

    @classmethod
    def standard(cls, coords: CoordinateSystem, density=1.0, box=None) -> "VolumeForm":
        top = tuple(range(coords.dimension))
        return cls(Form(coords, coords.dimension, {top: density}), box=box)

    @property
    def coords(self):
        return self.form.coords

    @property
    def density(self) -> ScalarExpr:
        return self.form[tuple(range(self.form.dimension))]

    def scaled(self, h: ScalarExpr) -> "VolumeForm":
        return VolumeForm(self.form * h, box=None)


def contract_into_volume(A: Multivector, omega: VolumeForm) -> Form:
    return interior(A, omega.form)


def solve_contraction(sigma: Form, omega: VolumeForm, p: int) -> Multivector:
    """The unique degree-``p`` multivector ``A`` with ``i_A Omega = sigma``."""
    m = omega.form.dimension
    if sigma.degree != m - p:
        raise DegreeMismatchError(f"need a degree {m - p} form to recover a {p}-vector")
    f = omega.density
    everything = set(range(m))
    out = {}
    for K, c in sigma._coeffs.items():
        J = tuple(sorted(everything - set(K)))
        out[J] = _signed(shuffle_sign(J, K), E.div(c, f))
    return Multivector(sigma.coords, p, out)


def trace_operator(A: Multivector, omega: VolumeForm) -> Multivector:
    """``D_Omega(A)`` defined by ``i_{D A} Omega = d i_A Omega``."""
    if A.degree < 1:
        raise DegreeMismatchError("trace operator needs degree >= 1")
    return solve_contraction(exterior_derivative(contract_into_volume(A, omega)), omega, A.degree - 1)


def divergence(X: Multivector, omega: VolumeForm) -> ScalarExpr:
    if X.degree != 1:
        raise DegreeMismatchError("divergence of a vector field")
    return trace_operator(X, omega)[()]
