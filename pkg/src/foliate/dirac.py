"""Dirac brackets for second-class constraints on a symplectic patch.

With ``omega_0`` symplectic, ``Pi_0`` its Poisson tensor (``{f, g}_0 =
Pi_0(df, dg)``) and constraints ``g_1 .. g_2k`` whose matrix
``Delta^{ij} = {g_i, g_j}_0`` is invertible with inverse ``Delta_{ij}``:

* ``omega_D = omega_0 + 1/2 sum Delta_{ij} dg_i ^ dg_j``,
* ``Pi_D = Pi_0 + 1/2 sum Delta_{ij} X_{g_i} ^ X_{g_j}``,
* ``X^D_f = X_f + sum Delta_{ij} {g_i, f}_0 X_{g_j}``,
* ``Z_i = sum_j Delta_{ij} X_{g_j}``, a frame dual to the ``dg_i``.

These are the conventions in which ``Pi_D(df, dg)`` is the classical Dirac
bracket ``{f, g}_0 - sum {f, g_i}_0 Delta_{ij} {g_j, g}_0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import expr as E
from . import linalg
from .errors import (DimensionMismatchError, SingularDeltaError, SingularSymplecticError,
                     VerificationFailed)
from .exterior import (Form, Multivector, VolumeForm, d, gradient, interior, lie_derivative,
                       pair, schouten, sharp, wedge, wedge_all, wedge_power)
from .expr import ScalarExpr
from .foliation import FoliationPresentation
from .poisson import PoissonStructure, jacobi_routes, poisson_from_compatible, probe_functions
from .verify import (CheckResult, ReportDocument, SampleBox, Sampling, check_nonvanishing,
                     check_zero, combine)

DET_THRESHOLD = 1e-12


def form_matrix(omega: Form) -> list[list[ScalarExpr]]:
    """Antisymmetric matrix ``W`` with ``omega = sum_{i<j} W_ij dx^i ^ dx^j``."""
    m = omega.dimension
    W = [[E.ZERO] * m for _ in range(m)]
    for (i, j), c in omega.coeffs.items():
        W[i][j] = c
        W[j][i] = E.neg(c)
    return W


def bivector_matrix(P: Multivector) -> list[list[ScalarExpr]]:
    m = P.dimension
    M = [[E.ZERO] * m for _ in range(m)]
    for (i, j), c in P.coeffs.items():
        M[i][j] = c
        M[j][i] = E.neg(c)
    return M


@dataclass(frozen=True)
class SymplecticData:
    """A symplectic form and its Poisson tensor, with ``W P = -I``."""

    omega: Form
    bivector: Multivector
    box: SampleBox
    sampling: Sampling
    inverse_check: CheckResult

    @property
    def coords(self):
        return self.omega.coords

    def bracket(self, f: ScalarExpr, g: ScalarExpr) -> ScalarExpr:
        return pair(self.bivector, gradient(f, self.coords), gradient(g, self.coords))

    def hamiltonian(self, f: ScalarExpr) -> Multivector:
        return sharp(self.bivector, gradient(E.as_expr(f), self.coords))

    def zero_check(self, obj, name: str, tol_abs: float | None = None) -> CheckResult:
        s = self.sampling
        return check_zero(obj, self.box, s.points, s.seed,
                          s.tol_abs if tol_abs is None else tol_abs, s.tol_rel, name)


def invert_symplectic(omega: Form, box: SampleBox, sampling: Sampling = Sampling()) -> SymplecticData:
    """Poisson tensor of a symplectic form via the symbolic matrix inverse.

    ``Pi_0 = -W^{-1}``, the sign for which ``i_{Pi_0} omega = 1`` in dimension
    two, i.e. ``{q, p}_0 = 1`` for ``omega = dq ^ dp``.
    """
    m = omega.dimension
    if omega.degree != 2:
        raise DimensionMismatchError("a symplectic form has degree 2")
    if m % 2:
        raise DimensionMismatchError("symplectic forms live in even dimension")
    W = form_matrix(omega)
    inv, det = linalg.inverse(W)
    nonzero = check_nonvanishing(det, box, sampling.points, sampling.seed, DET_THRESHOLD,
                                 "symplectic determinant")
    if not nonzero.passed:
        raise SingularSymplecticError(f"2-form is degenerate on the box ({nonzero.note})")
    P = Multivector(omega.coords, 2, {(i, j): E.neg(inv[i][j])
                                      for i in range(m) for j in range(i + 1, m)})
    product = linalg.matmul(W, bivector_matrix(P))
    entries = [E.add(product[i][j], E.ONE) if i == j else product[i][j]
               for i in range(m) for j in range(m)]
    check = check_zero(entries, box, sampling.points, sampling.seed, 1e-9, sampling.tol_rel,
                       "W Pi_0 = -I")
    if not check.passed:
        raise VerificationFailed("symplectic inverse does not check out", check)
    return SymplecticData(omega, P, box, sampling, check)


@dataclass(frozen=True)
class DiracResult:
    symplectic: SymplecticData
    constraints: tuple[ScalarExpr, ...]
    delta: tuple[tuple[ScalarExpr, ...], ...]
    delta_inv: tuple[tuple[ScalarExpr, ...], ...]
    omega: Form
    bivector: Multivector
    frame: tuple[Multivector, ...]
    mu: Form

    @property
    def coords(self):
        return self.symplectic.coords

    @property
    def r(self) -> int:
        return (self.coords.dimension - len(self.constraints)) // 2

    def foliation(self) -> FoliationPresentation:
        S = self.symplectic
        gens = [gradient(g, self.coords) for g in self.constraints]
        return FoliationPresentation(gens, S.box, self.coords, S.sampling)


def build_dirac(S: SymplecticData, constraints: Sequence[ScalarExpr]) -> DiracResult:
    """Assemble ``Delta``, its inverse, ``omega_D``, ``Pi_D`` and the frame ``Z_i``."""
    g = tuple(E.as_expr(c) for c in constraints)
    n = len(g)
    m = S.coords.dimension
    if n == 0 or n % 2 or n >= m:
        raise DimensionMismatchError("need an even number 2k < m of constraints")
    delta = [[S.bracket(g[i], g[j]) if i != j else E.ZERO for j in range(n)] for i in range(n)]
    inv, det = linalg.inverse(delta)
    s = S.sampling
    nonzero = check_nonvanishing(det, S.box, s.points, s.seed, DET_THRESHOLD, "det Delta")
    if not nonzero.passed:
        raise SingularDeltaError(f"constraint matrix is singular ({nonzero.note})",
                                 nonzero.worst_point)
    dg = [gradient(gi, S.coords) for gi in g]
    Xg = [S.hamiltonian(gi) for gi in g]
    omega = S.omega
    bivector = S.bivector
    for i in range(n):
        for j in range(n):
            if i == j or inv[i][j].is_zero():
                continue
            half = E.mul(E.const(0.5), inv[i][j])
            omega = omega + wedge(dg[i], dg[j]) * half
            bivector = bivector + wedge(Xg[i], Xg[j]) * half
    frame = []
    for i in range(n):
        Z = Multivector(S.coords, 1)
        for j in range(n):
            if not inv[i][j].is_zero():
                Z = Z + Xg[j] * inv[i][j]
        frame.append(Z)
    mu = wedge_all(dg, S.coords, Form)
    return DiracResult(S, g, tuple(map(tuple, delta)), tuple(map(tuple, inv)), omega,
                       bivector, tuple(frame), mu)


def dirac_hamiltonian(D: DiracResult, f: ScalarExpr, check: bool = True) -> Multivector:
    """``X^D_f = X_f + sum Delta_{ij} {g_i, f}_0 X_{g_j}``.

    With ``check`` set, agreement with ``Pi_D^#(df)`` is verified at the samples.
    """
    S = D.symplectic
    f = E.as_expr(f)
    X = S.hamiltonian(f)
    n = len(D.constraints)
    for i in range(n):
        gif = S.bracket(D.constraints[i], f)
        if gif.is_zero():
            continue
        for j in range(n):
            if not D.delta_inv[i][j].is_zero():
                X = X + S.hamiltonian(D.constraints[j]) * E.mul(D.delta_inv[i][j], gif)
    if check:
        direct = sharp(D.bivector, gradient(f, D.coords))
        agree = S.zero_check(X - direct, "X^D_f routes", tol_abs=1e-8)
        if not agree.passed:
            raise VerificationFailed("Dirac Hamiltonian field disagrees with Pi_D", agree)
    return X


def verify_dirac(D: DiracResult, probes: Sequence[ScalarExpr] | None = None) -> ReportDocument:
    """The seven structural checks of a Dirac reduction, plus one candidate identity.

    1. ``d omega_D ^ mu = 0``; 2. ``mu ^ omega_D^r = mu ^ omega_0^r``;
    3. Jacobi for ``Pi_D`` (both routes); 4. constraints are Casimirs;
    5. ``i_{X^D_f} L_{Z_i} mu = 0`` and ``mu ^ L_{Z_i} omega_D = 0``;
    6. ``[Pi_D, Z_i] = 0``; 7. ``Pi_D`` equals the bivector constructed from
    ``(mu, omega_D)``.  The extra item checks ``i_{Z_i} omega_D ^ mu = 0``.
    """
    S = D.symplectic
    if probes is None:
        probes = probe_functions(D.coords)
    r = D.r
    mu = D.mu
    report = ReportDocument("dirac")
    report.add(S.zero_check(wedge(d(D.omega), mu), "d omega_D ^ mu = 0"))
    top0 = wedge(mu, wedge_power(S.omega, r))
    report.add(S.zero_check(wedge(mu, wedge_power(D.omega, r)) - top0,
                            "mu ^ omega_D^r = mu ^ omega_0^r"))
    P = PoissonStructure(D.bivector, VolumeForm(top0), S.box, S.sampling)
    report.add(combine("jacobi", list(jacobi_routes(P, probes))))
    report.add(S.zero_check([sharp(D.bivector, gradient(g, D.coords)) for g in D.constraints],
                            "casimirs"))
    hamiltonians = [dirac_hamiltonian(D, f, check=False) for f in probes]
    z_items = []
    for Z in D.frame:
        Lmu = lie_derivative(Z, mu)
        z_items.extend(interior(X, Lmu) for X in hamiltonians)
        z_items.append(wedge(mu, lie_derivative(Z, D.omega)))
    report.add(S.zero_check(z_items, "frame conditions"))
    report.add(S.zero_check([schouten(D.bivector, Z) for Z in D.frame], "[Pi_D, Z] = 0"))
    built = poisson_from_compatible(D.foliation(), D.omega, probes)
    report.add(S.zero_check(D.bivector - built.bivector, "route agreement", tol_abs=1e-8))
    report.add(S.zero_check([wedge(interior(Z, D.omega), mu) for Z in D.frame],
                            "i_Z omega_D ^ mu = 0"))
    return report
