"""Poisson tensors built from foliations and compatible 2-forms.

Given a foliation with top wedge ``mu`` (codimension ``k``, ``m - k = 2r``)
and a 2-form ``omega`` with ``d omega ^ mu = 0`` and ``mu ^ omega^r``
nonvanishing, the bivector ``Pi`` defined by

    i_Pi (mu ^ omega^r) = r mu ^ omega^(r-1)

is Poisson and has the leaves as its symplectic leaves.  Brackets follow the
contraction conventions of :mod:`foliate.exterior`: ``{f, g} = Pi(df, dg)``
and ``X_f = Pi^#(df)``, so ``X_f(g) = {f, g}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as E
from .errors import DimensionMismatchError, JacobiFailed, VerificationFailed
from .exterior import (Form, Multivector, VolumeForm, apply_vector, d, divergence, gradient,
                       interior, lie_derivative, pair, schouten, sharp, solve_contraction,
                       trace_operator, wedge, wedge_power)
from .expr import CoordinateSystem, ScalarExpr
from .foliation import DualFrame, FoliationPresentation, delta_of, dual_frame
from .verify import (PASS, CheckResult, ReportDocument, SampleBox, Sampling, check_nonvanishing,
                     check_zero, combine, sample_values)

VOLUME_THRESHOLD = 1e-10
PROBE_SEED = 7
PROBE_COUNT = 8


def probe_functions(coords: CoordinateSystem, count: int = PROBE_COUNT,
                    seed: int = PROBE_SEED) -> list[ScalarExpr]:
    """The coordinate functions followed by ``count`` seeded random quadratics."""
    xs = coords.vars()
    m = coords.dimension
    rng = np.random.Generator(np.random.PCG64(seed))
    out = list(xs)
    for _ in range(count):
        c = rng.uniform(-1.0, 1.0, size=1 + m + m * (m + 1) // 2)
        terms = [E.const(float(c[0]))]
        terms += [E.mul(E.const(float(c[1 + i])), xs[i]) for i in range(m)]
        pos = 1 + m
        for i in range(m):
            for j in range(i, m):
                terms.append(E.mul(E.const(float(c[pos])), E.mul(xs[i], xs[j])))
                pos += 1
        out.append(E.total(terms))
    return out


def _zero(obj, box: SampleBox, sampling: Sampling, name: str, tol_abs: float | None = None):
    return check_zero(obj, box, sampling.points, sampling.seed,
                      sampling.tol_abs if tol_abs is None else tol_abs, sampling.tol_rel, name)


# ---------------------------------------------------------------------------
# compatible 2-forms

@dataclass(frozen=True)
class CompatibilityReport:
    """Foliated closedness of ``omega`` and nonvanishing of ``mu ^ omega^r``."""

    closed: CheckResult
    volume: CheckResult
    volume_form: Form

    @property
    def status(self) -> str:
        return combine("compatibility", [self.closed, self.volume]).status

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def results(self) -> list[CheckResult]:
        return [self.closed, self.volume]


def check_compatible(omega: Form, fol: FoliationPresentation) -> CompatibilityReport:
    """Evaluate ``d omega ^ mu = 0`` and ``|mu ^ omega^r| >= 1e-10`` at the samples."""
    if omega.coords != fol.coords:
        raise DimensionMismatchError("2-form and foliation live on different coordinates")
    if omega.degree != 2:
        raise DimensionMismatchError("a compatible form has degree 2")
    r = fol.r
    closed = fol.mod_mu(d(omega), "d omega ^ mu")
    top = wedge(fol.mu, wedge_power(omega, r))
    density = top[tuple(range(fol.m))]
    s = fol.sampling
    volume = check_nonvanishing(density, fol.box, s.points, s.seed, VOLUME_THRESHOLD,
                                "mu ^ omega^r volume")
    return CompatibilityReport(closed, volume, top)


def normalize_compatible(omega: Form, fol: FoliationPresentation,
                         frame: DualFrame | None = None) -> Form:
    """Shift ``omega`` by multiples of the generators so that ``i_{X^j} omega = 0``.

    ``omega~ = omega + sum_i (i_{X^i} omega) ^ alpha_i
    + 1/2 sum_{i,j} omega(X^i, X^j) alpha_i ^ alpha_j``.
    """
    if frame is None:
        frame = dual_frame(fol)
    gens = fol.generators
    out = omega
    for i, Xi in enumerate(frame):
        out = out + wedge(interior(Xi, omega), gens[i])
        for j, Xj in enumerate(frame):
            w = pair(omega, Xi, Xj)
            if not w.is_zero():
                out = out + wedge(gens[i], gens[j]) * E.mul(E.const(0.5), w)
    annihilated = fol.zero_check([interior(X, out) for X in frame], "i_X omega~ = 0")
    if not annihilated.passed:
        raise VerificationFailed("normalized form is not annihilated by the frame", annihilated)
    report = check_compatible(out, fol)
    if not report.passed:
        raise VerificationFailed("normalized form is not compatible",
                                 combine("compatibility", report.results()))
    return out


# ---------------------------------------------------------------------------
# Poisson structures

@dataclass(frozen=True)
class PoissonStructure:
    """A bivector with the volume form and sampling it is checked against.

    ``foliation`` and ``omega`` are set when the bivector was constructed from
    a compatible 2-form; ``construction`` then holds the postcondition checks.
    """

    bivector: Multivector
    volume: VolumeForm
    box: SampleBox
    sampling: Sampling = Sampling()
    foliation: FoliationPresentation | None = None
    omega: Form | None = None
    construction: ReportDocument | None = field(default=None, compare=False)

    @classmethod
    def from_bivector(cls, bivector: Multivector, box: SampleBox,
                      volume: VolumeForm | None = None,
                      sampling: Sampling = Sampling()) -> "PoissonStructure":
        if bivector.degree != 2:
            raise DimensionMismatchError("a Poisson tensor is a bivector")
        if volume is None:
            volume = VolumeForm.standard(bivector.coords)
        return cls(bivector, volume, box, sampling)

    @property
    def coords(self) -> CoordinateSystem:
        return self.bivector.coords

    @property
    def sigma(self) -> Form:
        """``i_Pi Omega`` for the structure's volume form."""
        return interior(self.bivector, self.volume.form)

    def bracket(self, f: ScalarExpr, g: ScalarExpr) -> ScalarExpr:
        return pair(self.bivector, gradient(f, self.coords), gradient(g, self.coords))

    def zero_check(self, obj, name: str, tol_abs: float | None = None) -> CheckResult:
        return _zero(obj, self.box, self.sampling, name, tol_abs)


def poisson_from_compatible(fol: FoliationPresentation, omega: Form,
                            probes: Sequence[ScalarExpr] | None = None) -> PoissonStructure:
    """Solve ``i_Pi (mu ^ omega^r) = r mu ^ omega^(r-1)`` for ``Pi`` and check it.

    The construction report holds the defining identity, both Jacobi routes
    and the Casimir property of the generators.
    """
    compat = check_compatible(omega, fol)
    if not compat.passed:
        raise VerificationFailed("2-form is not compatible with the foliation",
                                 combine("compatibility", compat.results()))
    r = fol.r
    if r < 1:
        raise DimensionMismatchError("leaves are points; there is no bivector to build")
    volume = VolumeForm(compat.volume_form)
    rhs = wedge(fol.mu, wedge_power(omega, r - 1)) * float(r)
    bivector = solve_contraction(rhs, volume, 2)
    P = PoissonStructure(bivector, volume, fol.box, fol.sampling, fol, omega)
    report = ReportDocument("construction")
    report.add(P.zero_check(interior(bivector, volume.form) - rhs, "defining identity",
                            tol_abs=1e-9))
    for res in jacobi_routes(P, probes):
        report.add(res)
    report.add(P.zero_check([sharp(bivector, a) for a in fol.generators], "casimirs",
                            tol_abs=1e-9))
    P = PoissonStructure(bivector, volume, fol.box, fol.sampling, fol, omega, report)
    jac = combine("jacobi", report.results[1:3])
    if not jac.passed:
        raise JacobiFailed("constructed bivector fails the Jacobi identity", jac)
    return P


def hamiltonian_field(P: PoissonStructure | Multivector, f: ScalarExpr) -> Multivector:
    """``X_f = Pi^#(df)``, components ``X^j = sum_i (df/dx_i) Pi^{ij}``."""
    bivector = P.bivector if isinstance(P, PoissonStructure) else P
    return sharp(bivector, gradient(E.as_expr(f), bivector.coords))


def jacobi_routes(P: PoissonStructure,
                  probes: Sequence[ScalarExpr] | None = None) -> tuple[CheckResult, CheckResult]:
    """Both Jacobi tests: ``[Pi, Pi] = 0`` and ``L_{X_f} sigma = div(X_f) sigma``."""
    if probes is None:
        probes = probe_functions(P.coords)
    bivector, volume = P.bivector, P.volume
    via_bracket = P.zero_check(schouten(bivector, bivector), "jacobi (schouten)")
    sigma = P.sigma
    residuals = []
    for f in probes:
        X = hamiltonian_field(bivector, f)
        residuals.append(lie_derivative(X, sigma) - sigma * divergence(X, volume))
    via_forms = P.zero_check(residuals, "jacobi (forms)")
    return via_bracket, via_forms


def jacobi_residual(P: PoissonStructure,
                    probes: Sequence[ScalarExpr] | None = None) -> CheckResult:
    """PASS iff both Jacobi routes pass; the note records each residual."""
    a, b = jacobi_routes(P, probes)
    out = combine("jacobi", [a, b])
    note = (f"schouten {a.status} {a.max_abs_residual:.3e}; "
            f"forms {b.status} {b.max_abs_residual:.3e}")
    return CheckResult(out.name, out.status, out.max_abs_residual, out.magnitude_scale,
                       out.worst_point, out.points_used, out.points_rejected, out.tol_abs,
                       out.tol_rel, note)


# ---------------------------------------------------------------------------
# modular vector field

@dataclass(frozen=True)
class ModularField:
    field: Multivector
    checks: ReportDocument


def modular_field(P: PoissonStructure, volume: VolumeForm | None = None,
                  probes: Sequence[ScalarExpr] | None = None,
                  strict: bool = True) -> ModularField:
    """``Z = D_Omega(Pi)`` with its defining properties checked.

    Checks ``div Z = 0``, ``[Pi, Z] = 0`` and ``div X_f = Z(f)`` on the
    probe functions; raises :class:`VerificationFailed` if one fails and
    ``strict`` is set.
    """
    if volume is None:
        volume = P.volume
    if probes is None:
        probes = probe_functions(P.coords)
    Z = trace_operator(P.bivector, volume)
    report = ReportDocument("modular field")
    report.add(P.zero_check(divergence(Z, volume), "div Z = 0"))
    report.add(P.zero_check(schouten(P.bivector, Z), "[Pi, Z] = 0"))
    report.add(P.zero_check(
        [E.sub(divergence(hamiltonian_field(P, f), volume), apply_vector(Z, f)) for f in probes],
        "div X_f = Z(f)"))
    if strict and report.overall != PASS:
        failing = [r for r in report.results if not r.passed]
        raise VerificationFailed(f"modular field fails {failing[0].name}", failing[0])
    return ModularField(Z, report)


def rescale_check(P: PoissonStructure, h: ScalarExpr, volume: VolumeForm | None = None) -> CheckResult:
    """``Z_{h Omega} = Z_Omega - X_{ln h}``, with ``d ln h`` taken as ``dh / h``."""
    if volume is None:
        volume = P.volume
    h = E.as_expr(h)
    Z = trace_operator(P.bivector, volume)
    Zh = trace_operator(P.bivector, volume.scaled(h))
    dlog = gradient(h, P.coords) / h
    return P.zero_check(Zh - Z + sharp(P.bivector, dlog), "volume rescaling")


def unimodular_certificate(P: PoissonStructure, h: ScalarExpr,
                           fol: FoliationPresentation | None = None,
                           probes: Sequence[ScalarExpr] | None = None) -> CheckResult:
    """Certificate that ``delta = dh`` on the leaves and ``Z = X_h``.

    Also cross-checks ``div X_f = -delta(X_f)`` on the probe functions.
    """
    fol = fol or P.foliation
    if fol is None:
        raise ValueError("a unimodularity certificate needs the foliation")
    if probes is None:
        probes = probe_functions(P.coords)
    h = E.as_expr(h)
    delta = delta_of(fol, dual_frame(fol))
    primitive = fol.mod_mu(gradient(h, fol.coords) - delta, "(dh - delta) ^ mu")
    Z = trace_operator(P.bivector, P.volume)
    hamiltonian = P.zero_check(Z - hamiltonian_field(P, h), "Z = X_h")
    cross = []
    for f in probes:
        X = hamiltonian_field(P, f)
        cross.append(E.add(divergence(X, P.volume), pair(delta, X)))
    divergence_check = P.zero_check(cross, "div X_f = -delta(X_f)")
    return combine("unimodular certificate", [primitive, hamiltonian, divergence_check])


def modular_class_check(P: PoissonStructure, fol: FoliationPresentation | None = None) -> CheckResult:
    """``i_{Pi^# delta} Omega`` and ``i_Z Omega`` agree after wedging with each generator."""
    fol = fol or P.foliation
    delta = delta_of(fol, dual_frame(fol))
    diff = interior(sharp(P.bivector, delta), P.volume.form) - interior(
        trace_operator(P.bivector, P.volume), P.volume.form)
    return P.zero_check([wedge(diff, a) for a in fol.generators], "modular class")


# ---------------------------------------------------------------------------
# transversally constant structures

def transversally_constant_check(P: PoissonStructure, fol: FoliationPresentation,
                                 frame: DualFrame | Sequence[Multivector], omega: Form,
                                 probes: Sequence[ScalarExpr] | None = None) -> ReportDocument:
    """Hypotheses and conclusion of the transversal-constancy criterion, per frame vector.

    For each ``X^j``: ``i_{X^j} omega = 0`` (precondition),
    ``i_{X_f} L_{X^j} mu = 0`` for the probes, ``i_{X^j} mu ^ d omega = 0``,
    and the conclusion ``[Pi, X^j] = 0``.
    """
    if probes is None:
        probes = probe_functions(fol.coords)
    report = ReportDocument("transversally constant")
    hamiltonians = [hamiltonian_field(P, f) for f in probes]
    domega = d(omega)
    for j, X in enumerate(frame, start=1):
        report.add(P.zero_check(interior(X, omega), f"X{j}: i_X omega = 0"))
        Lmu = lie_derivative(X, fol.mu)
        report.add(P.zero_check([interior(Xf, Lmu) for Xf in hamiltonians],
                                f"X{j}: i_Xf L_X mu = 0"))
        report.add(P.zero_check(wedge(interior(X, fol.mu), domega), f"X{j}: i_X mu ^ d omega = 0"))
        report.add(P.zero_check(schouten(P.bivector, X), f"X{j}: [Pi, X] = 0"))
    return report


# ---------------------------------------------------------------------------
# comparison with a reference bivector

@dataclass(frozen=True)
class Proportionality:
    factor: float
    result: CheckResult


def constant_multiple(A: Multivector, B: Multivector, box: SampleBox,
                      sampling: Sampling = Sampling(), tol: float = 1e-9) -> Proportionality:
    """Test ``A = lambda B`` for a single constant ``lambda``.

    At each sample ``lambda`` is the least-squares ratio; the residual is the
    larger of its spread across samples and ``max |A - lambda B|``.
    """
    keys = sorted(set(A.coeffs) | set(B.coeffs))
    roots = [A[k] for k in keys] + [B[k] for k in keys]
    pts, vals, rejected = sample_values(roots, box, sampling.points, sampling.seed)
    n = len(keys)
    a, b = vals[:, :n], vals[:, n:]
    bb = (b * b).sum(axis=1)
    if len(pts) == 0 or np.any(bb == 0):
        return Proportionality(float("nan"), CheckResult(
            "constant multiple", "INCONCLUSIVE", float("nan"), float("nan"), None, len(pts),
            rejected, tol, 0.0, "reference vanishes at a sample"))
    lam = (a * b).sum(axis=1) / bb
    factor = float(lam.mean())
    spread = float(lam.max() - lam.min())
    misfit = np.abs(a - factor * b).max(axis=1)
    worst = int(misfit.argmax())
    residual = max(spread, float(misfit[worst]))
    status = PASS if residual <= tol else "FAIL"
    return Proportionality(factor, CheckResult(
        "constant multiple", status, residual, float(np.abs(a).max()),
        tuple(float(x) for x in pts[worst]), len(pts), rejected, tol, 0.0,
        f"lambda = {factor:.12g}"))
