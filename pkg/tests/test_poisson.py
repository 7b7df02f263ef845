import pytest

from foliate import expr as E
from foliate.errors import DimensionMismatchError, JacobiFailed, VerificationFailed
from foliate.exterior import (divergence, dvec, dx, gradient, interior, lie_derivative, pair,
                              schouten, to_text)
from foliate.expr import CoordinateSystem, parse_scalar
from foliate.foliation import FoliationPresentation, dual_frame
from foliate.poisson import (PoissonStructure, check_compatible, constant_multiple,
                             hamiltonian_field, jacobi_residual, jacobi_routes, modular_class_check,
                             modular_field, normalize_compatible, poisson_from_compatible,
                             probe_functions, rescale_check, transversally_constant_check,
                             unimodular_certificate)
from foliate.verify import FAIL, PASS, SampleBox, check_zero

from _gen import random_poly, rng_for

C2 = CoordinateSystem(["x1", "x2"])
C3 = CoordinateSystem(["x1", "x2", "x3"])
C4 = CoordinateSystem(["x1", "x2", "x3", "y"])
BOX2 = SampleBox.cube(2)
BOX3 = SampleBox.cube(3)
POS3 = SampleBox([(1, 2), (-1, 1), (-1, 1)])
BOX4 = SampleBox.cube(4)


def plane_leaves():
    return FoliationPresentation([dx(C3, 2)], BOX3), dx(C3, 0, 1)


def rescaled_leaves():
    return FoliationPresentation([dx(C3, 1) * C3.var(0)], POS3), dx(C3, 0, 2)


def r4(c=1.0):
    fol = FoliationPresentation([dx(C4, 2), dx(C4, 0) + dx(C4, 3)], BOX4)
    return fol, dx(C4, 0, 1) + dx(C4, 1, 3) * E.const(c)


CATALOG = {"dx3": plane_leaves, "x1 dx2": rescaled_leaves, "r4": r4}


def vanishes(obj, box, tol=1e-9):
    res = check_zero(obj, box, tol_abs=tol)
    assert res.passed, res


def test_probe_functions_are_seeded():
    a, b = probe_functions(C3), probe_functions(C3)
    assert len(a) == 3 + 8
    assert [E.to_text(e) for e in a] == [E.to_text(e) for e in b]
    assert a[:3] == C3.vars()
    assert probe_functions(C3, seed=8)[3] is not a[3]


class TestCompatibility:
    def test_plane(self):
        fol, omega = plane_leaves()
        rep = check_compatible(omega, fol)
        assert rep.passed
        assert to_text(rep.volume_form) == "dx1^dx2^dx3"    # dx3 ^ dx1 ^ dx2

    def test_degenerate_on_leaves(self):
        fol, _ = plane_leaves()
        rep = check_compatible(dx(C3, 0, 2), fol)
        assert rep.status == FAIL and rep.volume.status == FAIL

    @pytest.mark.parametrize("c", [0.5, 1.0])
    def test_r4_volume(self, c):
        fol, omega = r4(c)
        rep = check_compatible(omega, fol)
        assert rep.passed
        density = rep.volume_form[(0, 1, 2, 3)]
        assert abs(E.eval_scalar(density, (0, 0, 0, 0))) == pytest.approx(1 + c)

    def test_not_foliated_closed(self):
        c5 = CoordinateSystem(["x1", "x2", "x3", "x4", "x5"])
        fol = FoliationPresentation([dx(c5, 4)], SampleBox.cube(5))
        omega = dx(c5, 0, 1) + dx(c5, 2, 3) + dx(c5, 1, 2) * c5.var(0)
        rep = check_compatible(omega, fol)
        assert rep.closed.status == FAIL and rep.volume.passed
        # a transversal dependence is harmless
        assert check_compatible(dx(c5, 0, 1) * E.exp(c5.var(4)) + dx(c5, 2, 3), fol).passed

    def test_odd_leaves(self):
        fol = FoliationPresentation([dx(C4, 0)], BOX4)
        with pytest.raises(DimensionMismatchError):
            check_compatible(dx(C4, 1, 2), fol)


class TestNormalize:
    def test_already_normal(self):
        fol, omega = plane_leaves()
        assert normalize_compatible(omega, fol).coeffs == omega.coeffs

    def test_example(self):
        fol, _ = plane_leaves()
        out = normalize_compatible(dx(C3, 0, 1) + dx(C3, 0, 2), fol)
        vanishes(out - dx(C3, 0, 1), BOX3)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    def test_r4(self, c):
        fol, omega = r4(c)
        out = normalize_compatible(omega, fol)
        vanishes([interior(X, out) for X in dual_frame(fol)], BOX4)


class TestConstruction:
    def test_symplectic_plane(self):
        fol = FoliationPresentation([], BOX2, C2)
        P = poisson_from_compatible(fol, dx(C2, 0, 1))
        assert to_text(P.bivector) == "d_x1^d_x2"
        assert P.bracket(C2.var(0), C2.var(1)).value == 1.0

    def test_plane_leaves(self):
        fol, omega = plane_leaves()
        P = poisson_from_compatible(fol, omega)
        vanishes(P.bivector - dvec(C3, 0, 1), BOX3)
        vanishes(hamiltonian_field(P, C3.var(2)), BOX3)    # x3 is a Casimir

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_construction_report(self, name):
        P = poisson_from_compatible(*CATALOG[name]())
        rep = P.construction
        assert rep.overall == PASS
        assert rep["defining identity"].max_abs_residual <= 1e-9
        assert rep["jacobi (schouten)"].max_abs_residual <= 1e-8
        assert rep["jacobi (forms)"].max_abs_residual <= 1e-8
        assert rep["casimirs"].max_abs_residual <= 1e-9

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_leafwise_identities(self, name):
        fol, omega = CATALOG[name]()
        P = poisson_from_compatible(fol, omega)
        rng = rng_for("leafwise", name)
        f, g = random_poly(fol.coords, rng, 4), random_poly(fol.coords, rng, 4)
        Xf, Xg = hamiltonian_field(P, f), hamiltonian_field(P, g)
        # (i_{X_f} omega + df) ^ mu = 0
        assert fol.mod_mu(interior(Xf, omega) + gradient(f, fol.coords), "i_Xf omega + df").passed
        # omega(X_f, X_g) = Pi(df, dg)
        vanishes(E.sub(pair(omega, Xf, Xg), P.bracket(f, g)), fol.box, tol=1e-8)
        # Hamiltonian fields are tangent to the leaves
        vanishes([pair(a, Xf) for a in fol.generators], fol.box)

    def test_r4_constant_multiple(self):
        fol, omega = r4(1.0)
        P = poisson_from_compatible(fol, omega)
        reference = dvec(C4, 0, 1) + dvec(C4, 1, 3)
        prop = constant_multiple(P.bivector, reference, BOX4)
        assert prop.result.passed
        assert prop.factor == pytest.approx(0.5, abs=1e-12)

    def test_incompatible_form_raises(self):
        fol, _ = plane_leaves()
        with pytest.raises(VerificationFailed):
            poisson_from_compatible(fol, dx(C3, 0, 2))

    def test_point_leaves_raise(self):
        fol = FoliationPresentation([dx(C2, 0), dx(C2, 1)], BOX2)
        with pytest.raises((DimensionMismatchError, VerificationFailed)):
            poisson_from_compatible(fol, dx(C2, 0, 1))


class TestJacobi:
    def test_constant(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1), BOX2)
        res = jacobi_residual(P)
        assert res.passed and res.max_abs_residual == 0.0

    def test_any_bivector_in_the_plane(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1) * C2.var(0), BOX2)
        assert jacobi_residual(P).passed

    def test_failure_by_both_routes(self):
        x1 = C4.var(0)
        P = PoissonStructure.from_bivector(dvec(C4, 0, 1) + dvec(C4, 2, 3) * x1, BOX4)
        a, b = jacobi_routes(P)
        assert a.status == FAIL and b.status == FAIL
        assert jacobi_residual(P).status == FAIL

    def test_failed_construction_raises_jacobi_failed(self):
        assert issubclass(JacobiFailed, VerificationFailed)

    def test_poisson_vector_field_criterion(self):
        # for X with [Pi, X] = 0: L_X sigma = div(X) sigma
        fol, omega = r4()
        P = poisson_from_compatible(fol, omega)
        for X in (dvec(C4, 2), dvec(C4, 0) + dvec(C4, 3)):
            vanishes(schouten(P.bivector, X), BOX4)
            vanishes(lie_derivative(X, P.sigma) - P.sigma * divergence(X, P.volume), BOX4, 1e-8)


class TestModular:
    def test_constant(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1), BOX2)
        assert modular_field(P).field.is_zero()

    def test_x1_plane(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1) * C2.var(0), BOX2)
        Z = modular_field(P)
        vanishes(Z.field + dvec(C2, 1), BOX2)    # Z = -d_x2 in these conventions
        assert Z.checks.overall == PASS

    def test_rescale_law(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1) * C2.var(0), BOX2)
        assert rescale_check(P, E.exp(C2.var(0))).passed
        assert rescale_check(P, E.add(E.const(3), C2.var(1))).passed

    def test_r4_unimodular(self):
        P = poisson_from_compatible(*r4())
        vanishes(modular_field(P).field, BOX4)
        assert unimodular_certificate(P, E.ZERO).passed
        assert modular_class_check(P).passed

    def test_rescaled_leaves_certificate(self):
        P = poisson_from_compatible(*rescaled_leaves())
        assert unimodular_certificate(P, parse_scalar("-ln(x1)", C3)).passed
        assert unimodular_certificate(P, E.ZERO).status == FAIL
        assert modular_class_check(P).passed

    def test_needs_foliation(self):
        P = PoissonStructure.from_bivector(dvec(C2, 0, 1), BOX2)
        with pytest.raises(ValueError):
            unimodular_certificate(P, E.ZERO)


class TestTransversallyConstant:
    def test_r4(self):
        fol, omega = r4()
        P = poisson_from_compatible(fol, omega)
        rep = transversally_constant_check(P, fol, dual_frame(fol), omega)
        assert rep.overall == PASS
        assert len(rep.results) == 8

    def test_x1_bivector_along_x3(self):
        fol = FoliationPresentation([dx(C3, 2)], BOX3)
        P = PoissonStructure.from_bivector(dvec(C3, 0, 1) * C3.var(0), BOX3)
        rep = transversally_constant_check(P, fol, [dvec(C3, 2)], dx(C3, 0, 1))
        assert rep["X1: [Pi, X] = 0"].passed

    def test_conclusion_fails_when_coefficients_depend_on_transversal(self):
        fol = FoliationPresentation([dx(C3, 2)], BOX3)
        P = PoissonStructure.from_bivector(dvec(C3, 0, 1) * E.exp(C3.var(2)), BOX3)
        rep = transversally_constant_check(P, fol, [dvec(C3, 2)], dx(C3, 0, 1))
        assert rep["X1: [Pi, X] = 0"].status == FAIL


class TestConstantMultiple:
    def test_non_constant_ratio(self):
        A = dvec(C2, 0, 1) * C2.var(0)
        res = constant_multiple(A, dvec(C2, 0, 1), BOX2)
        assert res.result.status == FAIL

    def test_exact_multiple(self):
        res = constant_multiple(dvec(C2, 0, 1) * E.const(-3), dvec(C2, 0, 1), BOX2)
        assert res.result.passed and res.factor == -3.0
