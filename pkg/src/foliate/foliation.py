"""Regular foliations presented by independent 1-forms.

A codimension-``k`` foliation of a coordinate box is given by generators
``alpha_1 .. alpha_k`` with ``d alpha_i ^ mu = 0`` where
``mu = alpha_1 ^ ... ^ alpha_k``.  This module builds the Euclidean dual
frame, the connection matrix, the obstruction 1-form ``delta`` (fixed by
``d mu = -delta ^ mu``) and the checks built on them.  Every identity is
checked by sampling (see :mod:`foliate.verify`).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from . import expr as E
from . import linalg
from .errors import (DegreeMismatchError, DimensionMismatchError, RankDeficientError,
                     SingularFrameError, VerificationFailed)
from .exterior import Form, Multivector, d, lie_derivative, pair, schouten, wedge, wedge_all
from .expr import ScalarExpr
from .verify import (FAIL, PASS, CheckResult, ReportDocument, SampleBox, Sampling, check_zero,
                     check_nonvanishing, combine, sample_values)

INDEPENDENCE_RATIO = 1e-8
FRAME_DET_THRESHOLD = 1e-12
FRAME_TOL_ABS = 1e-9


class FoliationPresentation:
    """Generators of a foliation on a sample box, with ``mu`` precomputed.

    ``k = 0`` is allowed: then ``mu`` is the constant 0-form 1 and the
    "foliation" has the whole box as its single leaf.
    """

    __slots__ = ("coords", "generators", "mu", "box", "sampling")

    def __init__(self, generators: Sequence[Form], box: SampleBox, coords=None,
                 sampling: Sampling = Sampling()):
        gens = tuple(generators)
        if coords is None:
            if not gens:
                raise ValueError("coordinates are required when there are no generators")
            coords = gens[0].coords
        for a in gens:
            if not isinstance(a, Form) or a.degree != 1:
                raise DegreeMismatchError("generators must be 1-forms")
            if a.coords != coords:
                raise DimensionMismatchError("generators live on different coordinate systems")
        if len(gens) > coords.dimension:
            raise DimensionMismatchError("more generators than coordinates")
        if box.dimension != coords.dimension:
            raise DimensionMismatchError("sample box and coordinates disagree in dimension")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "mu", wedge_all(gens, coords, Form))
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "sampling", sampling)

    def __setattr__(self, name, value):
        raise AttributeError("FoliationPresentation is immutable")

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def m(self) -> int:
        return self.coords.dimension

    @property
    def r(self) -> int:
        """Half the leaf dimension; only defined when ``m - k`` is even."""
        if (self.m - self.k) % 2:
            raise DimensionMismatchError(f"leaf dimension {self.m - self.k} is odd")
        return (self.m - self.k) // 2

    def with_generators(self, generators: Sequence[Form]) -> "FoliationPresentation":
        return FoliationPresentation(generators, self.box, self.coords, self.sampling)

    def zero_check(self, obj, name: str, tol_abs: float | None = None) -> CheckResult:
        s = self.sampling
        return check_zero(obj, self.box, s.points, s.seed,
                          s.tol_abs if tol_abs is None else tol_abs, s.tol_rel, name)

    def mod_mu(self, form: Form, name: str, tol_abs: float | None = None) -> CheckResult:
        """Check ``form ^ mu = 0``, i.e. that ``form`` vanishes on the leaves."""
        return self.zero_check(wedge(form, self.mu), name, tol_abs)


def _generator_matrix(gens: Sequence[Form], points: np.ndarray) -> np.ndarray:
    """Numeric ``(n, k, m)`` array of generator coefficients at ``points``."""
    m = gens[0].dimension
    roots = [g[(c,)] for g in gens for c in range(m)]
    from ._program import compile_roots
    values, bad, _ = compile_roots(roots).evaluate(points)
    return values.reshape(len(points), len(gens), m), bad


def check_independence(gens: Sequence[Form], box: SampleBox,
                       sampling: Sampling = Sampling()) -> CheckResult:
    """Rank-``k`` test of the coefficient matrix at every sample point.

    The residual is the shortfall of ``s_min / s_max`` below the threshold.
    """
    if not gens:
        return CheckResult("independence", PASS, 0.0, 0.0, None, sampling.points, 0, 0.0, 0.0)
    roots = [g[(c,)] for g in gens for c in range(gens[0].dimension)]
    pts, vals, rejected = sample_values(roots, box, sampling.points, sampling.seed)
    if len(pts) == 0:
        return CheckResult("independence", "INCONCLUSIVE", float("nan"), float("nan"), None,
                           0, rejected, 0.0, 0.0, "no evaluable sample point")
    mats = vals.reshape(len(pts), len(gens), -1)
    sv = np.linalg.svd(mats, compute_uv=False)
    ratio = np.where(sv[:, 0] > 0, sv[:, -1] / np.where(sv[:, 0] > 0, sv[:, 0], 1.0), 0.0)
    worst = int(ratio.argmin())
    shortfall = max(0.0, INDEPENDENCE_RATIO - float(ratio[worst]))
    total = len(pts) + rejected
    if rejected / total > 0.5:
        status = "INCONCLUSIVE"
    else:
        status = PASS if float(ratio[worst]) > INDEPENDENCE_RATIO else FAIL
    return CheckResult("independence", status, shortfall, float(sv[:, 0].max()),
                       tuple(float(x) for x in pts[worst]), len(pts), rejected, 0.0, 0.0,
                       f"min singular-value ratio = {float(ratio[worst]):.6g}")


def check_integrability(gens: Sequence[Form], box: SampleBox,
                        sampling: Sampling = Sampling()) -> CheckResult:
    """PASS iff the generators are independent and ``d alpha_i ^ mu = 0``."""
    gens = list(gens)
    if gens:
        coords = gens[0].coords
        if any(g.coords != coords for g in gens):
            raise DimensionMismatchError("generators live on different coordinate systems")
        if len(gens) > coords.dimension:
            raise DimensionMismatchError("more generators than coordinates")
    indep = check_independence(gens, box, sampling)
    if not gens:
        return indep.renamed("integrability")
    mu = wedge_all(gens, gens[0].coords, Form)
    closure = check_zero([wedge(d(a), mu) for a in gens], box, sampling.points, sampling.seed,
                         sampling.tol_abs, sampling.tol_rel, "d alpha ^ mu")
    return combine("integrability", [closure, indep])


# ---------------------------------------------------------------------------
# dual frame, connection matrix, delta

@dataclass(frozen=True)
class DualFrame:
    """Vector fields ``X^j`` with ``alpha_i(X^j) = delta_ij``."""

    vectors: tuple[Multivector, ...]
    check: CheckResult

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, j: int) -> Multivector:
        return self.vectors[j]

    def __iter__(self):
        return iter(self.vectors)


def _raise_index(alpha: Form) -> Multivector:
    return Multivector(alpha.coords, 1, dict(alpha.coeffs))


def frame_check(fol: FoliationPresentation, vectors: Sequence[Multivector]) -> CheckResult:
    """Duality residual ``max |alpha_i(X^j) - delta_ij|``."""
    entries = []
    for i, a in enumerate(fol.generators):
        for j, X in enumerate(vectors):
            value = pair(a, X)
            entries.append(E.sub(value, E.ONE) if i == j else value)
    return fol.zero_check(entries, "dual frame", tol_abs=FRAME_TOL_ABS)


def dual_frame(fol: FoliationPresentation) -> DualFrame:
    """Euclidean dual frame ``X^j = sum_i (Gram^-1)_{ji} alpha_i^#``."""
    gens = fol.generators
    k = len(gens)
    if k == 0:
        return DualFrame((), frame_check(fol, ()))
    gram = [[E.total(E.mul(gens[a][(c,)], gens[b][(c,)]) for c in range(fol.m))
             for b in range(k)] for a in range(k)]
    det = linalg.det(gram)
    s = fol.sampling
    nonzero = check_nonvanishing(det, fol.box, s.points, s.seed, FRAME_DET_THRESHOLD,
                                 "Gram determinant")
    if not nonzero.passed:
        raise SingularFrameError(f"Gram determinant too small: {nonzero.note}")
    adj = linalg.adjugate(gram)
    raised = [_raise_index(a) for a in gens]
    vectors = []
    for j in range(k):
        X = Multivector(fol.coords, 1)
        for i in range(k):
            if not adj[j][i].is_zero():
                X = X + raised[i] * E.div(adj[j][i], det)
        vectors.append(X)
    check = frame_check(fol, vectors)
    if not check.passed:
        raise VerificationFailed("dual frame fails duality", check)
    return DualFrame(tuple(vectors), check)


def perturbed_frame(fol: FoliationPresentation, frame: DualFrame,
                    tangents: Sequence[Multivector]) -> DualFrame:
    """The frame ``X^j + T^j``; each ``T^j`` must be tangent to the leaves."""
    if len(tangents) != len(frame):
        raise DimensionMismatchError("one tangent field per frame vector")
    vectors = tuple(X + T for X, T in zip(frame, tangents))
    return DualFrame(vectors, frame_check(fol, vectors))


def tangent_projection(fol: FoliationPresentation, frame: DualFrame, V: Multivector) -> Multivector:
    """``V - sum_i alpha_i(V) X^i``, which is tangent to the leaves."""
    out = V
    for a, X in zip(fol.generators, frame):
        out = out - X * pair(a, V)
    return out


@dataclass(frozen=True)
class ConnectionMatrix:
    """1-forms ``G[i][j]`` with ``d alpha_i = sum_j G[i][j] ^ alpha_j``."""

    entries: tuple[tuple[Form, ...], ...]
    check: CheckResult

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]


def connection_matrix(fol: FoliationPresentation, frame: DualFrame) -> ConnectionMatrix:
    """``G_i^j = -L_{X^j} alpha_i - 1/2 sum_r alpha_i([X^r, X^j]) alpha_r``, verified."""
    gens, k = fol.generators, fol.k
    brackets = {(r, j): schouten(frame[r], frame[j]) for r in range(k) for j in range(k)}
    rows = []
    for i in range(k):
        row = []
        for j in range(k):
            G = -lie_derivative(frame[j], gens[i])
            for r in range(k):
                coeff = pair(gens[i], brackets[(r, j)])
                if not coeff.is_zero():
                    G = G - gens[r] * E.mul(E.const(0.5), coeff)
            row.append(G)
        rows.append(tuple(row))
    residuals = []
    for i in range(k):
        res = d(gens[i])
        for j in range(k):
            res = res - wedge(rows[i][j], gens[j])
        residuals.append(res)
    check = fol.zero_check(residuals, "d alpha = G ^ alpha")
    if not check.passed:
        raise VerificationFailed("connection matrix does not reproduce d alpha", check)
    return ConnectionMatrix(tuple(rows), check)


@dataclass(frozen=True)
class DeltaForm:
    """The 1-form ``delta`` together with the frame it came from and its checks."""

    form: Form
    frame: DualFrame
    structure: CheckResult
    closed: CheckResult


def delta_of(fol: FoliationPresentation, frame: DualFrame) -> Form:
    """``delta = sum_i L_{X^i} alpha_i`` (unverified)."""
    out = Form(fol.coords, 1)
    for a, X in zip(fol.generators, frame):
        out = out + lie_derivative(X, a)
    return out


def delta_form(fol: FoliationPresentation, frame: DualFrame | None = None) -> DeltaForm:
    """``delta`` with ``d mu + delta ^ mu = 0`` and ``d delta ^ mu = 0`` verified."""
    if frame is None:
        frame = dual_frame(fol)
    delta = delta_of(fol, frame)
    structure = fol.zero_check(d(fol.mu) + wedge(delta, fol.mu), "d mu + delta ^ mu")
    closed = fol.mod_mu(d(delta), "d delta ^ mu")
    for res in (structure, closed):
        if not res.passed:
            raise VerificationFailed(f"delta form fails {res.name}", res)
    return DeltaForm(delta, frame, structure, closed)


# ---------------------------------------------------------------------------
# well-posedness of the obstruction class

def default_change_matrix(fol: FoliationPresentation) -> list[list[ScalarExpr]]:
    """An invertible generator change: upper triangular, ``exp`` on the diagonal."""
    k, m = fol.k, fol.m
    xs = fol.coords.vars()
    F = [[E.ZERO] * k for _ in range(k)]
    for i in range(k):
        F[i][i] = E.exp(E.mul(E.const(0.5), xs[i % m]))
        for j in range(i + 1, k):
            F[i][j] = xs[(i + j) % m]
    return F


def default_tangent_fields(fol: FoliationPresentation, frame: DualFrame) -> list[Multivector]:
    xs = fol.coords.vars()
    m = fol.m
    out = []
    for j in range(fol.k):
        V = Multivector(fol.coords, 1, {((j + 1) % m,): xs[(j + 1) % m] if m > 1 else E.ONE,
                                         ((j + 2) % m,): xs[j % m]})
        out.append(tangent_projection(fol, frame, V))
    return out


def change_generators(fol: FoliationPresentation, F) -> FoliationPresentation:
    """Generators ``alpha~_i = sum_j F_ij alpha_j``."""
    new = []
    for i in range(fol.k):
        a = Form(fol.coords, 1)
        for j in range(fol.k):
            fij = E.as_expr(F[i][j])
            if not fij.is_zero():
                a = a + fol.generators[j] * fij
        new.append(a)
    return fol.with_generators(new)


def delta_wellposedness_suite(fol: FoliationPresentation, F=None,
                              tangents: Sequence[Multivector] | None = None) -> ReportDocument:
    """Frame and generator independence of the class of ``delta``.

    Items: (i) ``(d delta~ - d delta) ^ mu = 0`` under a generator change;
    (ii) ``(delta~ - delta) ^ mu = 0`` under a tangent frame perturbation;
    (iii) ``(delta~ - delta + d det F / det F) ^ mu = 0`` under a generator
    change by ``F``; plus ``mu~ = det(F) mu``.
    """
    report = ReportDocument("delta well-posedness")
    frame = dual_frame(fol)
    delta = delta_of(fol, frame)
    if F is None:
        F = default_change_matrix(fol)
    if tangents is None:
        tangents = default_tangent_fields(fol, frame)

    moved = change_generators(fol, F)
    delta_moved = delta_of(moved, dual_frame(moved))
    report.add(fol.mod_mu(d(delta_moved) - d(delta), "generator change: d delta"))

    tangency = fol.zero_check([pair(a, T) for a in fol.generators for T in tangents],
                              "perturbation tangency")
    perturbed = perturbed_frame(fol, frame, tangents)
    report.add(combine("frame change: delta mod mu",
                       [tangency, fol.mod_mu(delta_of(fol, perturbed) - delta, "")]))

    detF = linalg.det(F) if fol.k else E.ONE
    dlog = Form(fol.coords, 1, {(i,): E.div(E.partial(detF, i), detF) for i in range(fol.m)})
    report.add(fol.mod_mu(delta_moved - delta + dlog, "generator change: d ln det F"))
    report.add(fol.zero_check(moved.mu - fol.mu * detF, "mu~ = det F mu"))
    return report


# ---------------------------------------------------------------------------
# F-equivalence and the foliated derivative

def f_equivalent(beta: Form, rho: Form, fol: FoliationPresentation) -> CheckResult:
    """PASS iff ``(beta - rho) ^ mu = 0`` at the samples."""
    if beta.degree != rho.degree:
        raise DegreeMismatchError("F-equivalence compares forms of equal degree")
    return fol.mod_mu(beta - rho, "F-equivalence")


def tangent_basis_at(fol: FoliationPresentation, point: Sequence[float]) -> np.ndarray:
    """Orthonormal basis (as rows) of the common kernel of the generators at ``point``."""
    m, k = fol.m, fol.k
    if k == 0:
        return np.eye(m)
    pts = np.asarray([point], dtype=float)
    mats, bad = _generator_matrix(fol.generators, pts)
    if bad[0]:
        raise RankDeficientError("generators cannot be evaluated at the point")
    A = mats[0]
    _, s, vt = np.linalg.svd(A)
    if s[0] == 0 or s[-1] <= INDEPENDENCE_RATIO * s[0]:
        raise RankDeficientError(f"generators are dependent at {tuple(point)}")
    return vt[k:]


def _evaluate_on_tuples(coeffs: dict, values: np.ndarray, basis: np.ndarray, q: int) -> float:
    """Largest ``|beta(v_S)|`` over ``q``-subsets ``S`` of the rows of ``basis``."""
    if q == 0:
        return abs(float(values[0])) if len(values) else 0.0
    worst = 0.0
    for S in combinations(range(len(basis)), q):
        V = basis[list(S)]
        total = 0.0
        for idx, I in enumerate(coeffs):
            total += values[idx] * np.linalg.det(V[:, list(I)])
        worst = max(worst, abs(total))
    return worst


def tangent_crosscheck(beta: Form, rho: Form, fol: FoliationPresentation,
                       tol: float = 1e-8) -> CheckResult:
    """At each sample, ``(beta - rho) ^ mu = 0`` iff ``beta - rho`` kills tangent tuples.

    The residual counts the sample points where the two criteria disagree.
    """
    diff = beta - rho
    wedge_roots = [c for _, c in sorted(wedge(diff, fol.mu).coeffs.items())]
    keys = sorted(diff.coeffs)
    diff_roots = [diff.coeffs[key] for key in keys]
    s = fol.sampling
    pts, vals, rejected = sample_values(wedge_roots + diff_roots or [E.ZERO], fol.box,
                                        s.points, s.seed)
    disagreements = 0
    worst_point = None
    for p, row in zip(pts, vals):
        w = float(np.abs(row[:len(wedge_roots)]).max()) if wedge_roots else 0.0
        try:
            basis = tangent_basis_at(fol, p)
        except RankDeficientError:
            continue
        t = _evaluate_on_tuples(dict.fromkeys(keys), row[len(wedge_roots):], basis,
                                diff.degree) if keys else 0.0
        if (w <= tol) != (t <= tol):
            disagreements += 1
            worst_point = tuple(float(x) for x in p)
    status = PASS if disagreements == 0 and len(pts) else FAIL
    return CheckResult("tangent cross-check", status, float(disagreements), 0.0, worst_point,
                       len(pts), rejected, 0.0, 0.0,
                       f"{disagreements} disagreeing sample point(s)")


def foliated_derivative_check(beta: Form, rho: Form, fol: FoliationPresentation) -> CheckResult:
    """``d`` respects F-equivalence and squares to zero on representatives."""
    pre = f_equivalent(beta, rho, fol).renamed("representatives F-equivalent")
    well_defined = fol.mod_mu(d(beta) - d(rho), "d beta ~ d rho")
    parts = [pre, well_defined]
    if beta.degree + 2 <= fol.m:
        parts.append(fol.mod_mu(d(d(beta)), "d d beta ~ 0"))
    return combine("foliated derivative", parts)


# ---------------------------------------------------------------------------
# obstruction certificate

@dataclass(frozen=True)
class Certificate:
    """Result of checking a primitive ``h`` of ``delta`` on the leaves."""

    result: CheckResult
    generators: tuple[Form, ...] | None
    closure: CheckResult | None


def obstruction_certificate(fol: FoliationPresentation, h: ScalarExpr,
                            delta: Form | None = None) -> Certificate:
    """Check ``(dh - delta) ^ mu = 0``; on success rescale ``alpha_1`` by ``e^h``.

    The rescaled generators have a closed top wedge, which is checked too.
    """
    if delta is None:
        delta = delta_of(fol, dual_frame(fol))
    h = E.as_expr(h)
    dh = Form(fol.coords, 1, {(i,): E.partial(h, i) for i in range(fol.m)})
    primitive = fol.mod_mu(dh - delta, "(dh - delta) ^ mu")
    if not primitive.passed or fol.k == 0:
        return Certificate(primitive.renamed("obstruction certificate"),
                           fol.generators if primitive.passed else None, None)
    gens = (fol.generators[0] * E.exp(h),) + fol.generators[1:]
    mu_new = wedge_all(gens, fol.coords, Form)
    closure = fol.zero_check(d(mu_new), "d mu~")
    return Certificate(combine("obstruction certificate", [primitive, closure]), gens, closure)
