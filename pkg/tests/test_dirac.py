import pytest

from foliate import expr as E
from foliate.dirac import (build_dirac, dirac_hamiltonian, form_matrix, invert_symplectic,
                           verify_dirac)
from foliate.errors import DimensionMismatchError, SingularDeltaError, SingularSymplecticError
from foliate.exterior import dvec, dx, gradient, pair, to_text
from foliate.expr import CoordinateSystem, parse_scalar
from foliate.poisson import hamiltonian_field, jacobi_residual, PoissonStructure
from foliate.verify import PASS, SampleBox, check_zero

from _gen import random_poly, rng_for

C2 = CoordinateSystem(["q1", "p1"])
C4 = CoordinateSystem(["q1", "p1", "q2", "p2"])
BOX2 = SampleBox.cube(2)
BOX4 = SampleBox.cube(4)


def canonical():
    return invert_symplectic(dx(C4, 0, 1) + dx(C4, 2, 3), BOX4)


def s(text):
    return parse_scalar(text, C4)


def vanishes(obj, box=BOX4, tol=1e-9):
    res = check_zero(obj, box, tol_abs=tol)
    assert res.passed, res


class TestSymplectic:
    def test_plane_anchor(self):
        S = invert_symplectic(dx(C2, 0, 1), BOX2)
        assert to_text(S.bivector) == "d_q1^d_p1"
        assert S.bracket(C2.var(0), C2.var(1)).value == 1.0
        assert S.inverse_check.passed

    def test_block(self):
        S = canonical()
        vanishes(S.bivector - dvec(C4, 0, 1) - dvec(C4, 2, 3))

    def test_variable(self):
        S = invert_symplectic(dx(C2, 0, 1) * parse_scalar("1 + q1**2", C2), BOX2)
        vanishes(S.bivector - dvec(C2, 0, 1) * parse_scalar("1/(1 + q1**2)", C2), BOX2)

    def test_form_matrix_antisymmetric(self):
        W = form_matrix(dx(C4, 0, 1) + dx(C4, 1, 3) * C4.var(0))
        for i in range(4):
            for j in range(4):
                vanishes(E.add(W[i][j], W[j][i]))

    def test_odd_dimension(self):
        c3 = CoordinateSystem(["a", "b", "c"])
        with pytest.raises(DimensionMismatchError):
            invert_symplectic(dx(c3, 0, 1), SampleBox.cube(3))

    def test_degenerate(self):
        with pytest.raises(SingularSymplecticError):
            invert_symplectic(dx(C4, 0, 1), BOX4)


@pytest.fixture(scope="module")
def canonical_reduction():
    return build_dirac(canonical(), [C4.var(2), C4.var(3)])


@pytest.fixture(scope="module")
def variable_reduction():
    return build_dirac(canonical(), [s("q2"), s("p2*(1 + q1**2)")])


class TestCanonicalReduction:
    @pytest.fixture
    def D(self, canonical_reduction):
        return canonical_reduction

    def test_bivector_is_the_q1_p1_block(self, D):
        vanishes(D.bivector - dvec(C4, 0, 1), tol=1e-12)

    def test_constraints_are_casimirs(self, D):
        for g in D.constraints:
            vanishes(dirac_hamiltonian(D, g), tol=1e-12)

    def test_delta_matrix(self, D):
        assert E.eval_scalar(D.delta[0][1], (0, 0, 0, 0)) == 1.0
        vanishes([E.add(D.delta[i][j], D.delta[j][i]) for i in range(2) for j in range(2)],
                 tol=1e-12)

    def test_omega_block_cancels(self, D):
        vanishes(D.omega - dx(C4, 0, 1), tol=1e-12)

    def test_unconstrained_function(self, D):
        q1 = C4.var(0)
        vanishes(dirac_hamiltonian(D, q1) - D.symplectic.hamiltonian(q1))

    def test_frame_is_dual(self, D):
        dg = [gradient(g, C4) for g in D.constraints]
        vanishes([E.sub(pair(a, Z), E.ONE if i == j else E.ZERO)
                  for i, a in enumerate(dg) for j, Z in enumerate(D.frame)])

    def test_verify(self, D):
        rep = verify_dirac(D)
        assert rep.overall == PASS, rep.results
        assert len(rep.results) == 8


class TestVariableReduction:
    @pytest.fixture
    def D(self, variable_reduction):
        return variable_reduction

    def test_delta_entry(self, D):
        vanishes(E.sub(D.delta[0][1], s("1 + q1**2")))

    def test_inverse(self, D):
        n = len(D.constraints)
        vanishes([E.sub(E.total(E.mul(D.delta[i][j], D.delta_inv[j][l]) for j in range(n)),
                        E.ONE if i == l else E.ZERO) for i in range(n) for l in range(n)])

    def test_verify_all_pass(self, D):
        rep = verify_dirac(D)
        assert rep.overall == PASS, rep.results
        assert all(r.max_abs_residual <= 1e-8 for r in rep.results)

    def test_jacobi(self, D):
        P = PoissonStructure.from_bivector(D.bivector, BOX4)
        assert jacobi_residual(P).passed

    @pytest.mark.parametrize("seed", range(3))
    def test_routes_for_random_cubics(self, D, seed):
        rng = rng_for("dirac-cubic", seed)
        f = random_poly(C4, rng, terms=4, max_degree=3)
        dirac_hamiltonian(D, f, check=True)

    @pytest.mark.parametrize("seed", range(3))
    def test_classical_bracket(self, D, seed):
        # {f, g}_D = {f, g}_0 - sum {f, g_i}_0 Delta_ij {g_j, g}_0
        rng = rng_for("dirac-bracket", seed)
        f, g = random_poly(C4, rng, 3), random_poly(C4, rng, 3)
        S = D.symplectic
        n = len(D.constraints)
        corr = E.total(E.mul(E.mul(S.bracket(f, D.constraints[i]), D.delta_inv[i][j]),
                             S.bracket(D.constraints[j], g))
                       for i in range(n) for j in range(n))
        expected = E.sub(S.bracket(f, g), corr)
        got = pair(D.bivector, gradient(f, C4), gradient(g, C4))
        vanishes(E.sub(got, expected), tol=1e-8)

    def test_hamiltonian_matches_bivector(self, D):
        f = s("q1*p1 + sin(q2)")
        vanishes(dirac_hamiltonian(D, f) - hamiltonian_field(D.bivector, f), tol=1e-8)


class TestErrors:
    def test_equal_constraints(self):
        with pytest.raises(SingularDeltaError) as info:
            build_dirac(canonical(), [C4.var(2), C4.var(2)])
        assert info.value.worst_point is not None

    def test_commuting_constraints(self):
        with pytest.raises(SingularDeltaError):
            build_dirac(canonical(), [C4.var(0), C4.var(2)])

    @pytest.mark.parametrize("count", [0, 1, 3, 4])
    def test_constraint_count(self, count):
        with pytest.raises(DimensionMismatchError):
            build_dirac(canonical(), C4.vars()[:count])
