import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foliate import expr as E
from foliate._program import BACKENDS, compile_roots
from foliate.errors import EvalError, ExprSyntaxError, UnknownIdentifierError
from foliate.expr import CoordinateSystem, parse_scalar

from _gen import expression_text, random_poly, rng_for

C3 = CoordinateSystem(["x1", "x2", "x3"])
C2 = CoordinateSystem(["x1", "x2"])


class TestCoordinateSystem:
    def test_names_and_dimension(self):
        c = CoordinateSystem(["x1", "x2", "x3", "y"])
        assert c.dimension == 4
        assert c.index("y") == 3

    @pytest.mark.parametrize("names", [
        [],
        ["x", "x"],
        ["1x"],
        ["sin"],
        ["x1", "dx1"],
        ["x1", "d_x1"],
    ])
    def test_rejects_bad_names(self, names):
        with pytest.raises(ValueError):
            CoordinateSystem(names)


class TestParse:
    def test_sum_of_product_and_function(self):
        e = parse_scalar("x1*x2 + sin(x3)", C3)
        x1, x2, x3 = C3.vars()
        assert e is E.add(E.mul(x1, x2), E.sin(x3))

    def test_power_over_sum(self):
        e = parse_scalar("x1**2/(1+x2)", C3)
        x1, x2, _ = C3.vars()
        assert e is E.div(E.power(x1, 2), E.add(E.const(1), x2))

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as info:
            parse_scalar("x1 + q", C2)
        assert info.value.name == "q"
        assert info.value.position == 5

    @pytest.mark.parametrize("text, position", [
        ("x1 +", 4),
        ("(x1", 3),
        ("x1 ^ x2", 3),
        ("sin x1", 4),
        ("x1 ** x2", 3),
    ])
    def test_syntax_errors_carry_position(self, text, position):
        with pytest.raises(ExprSyntaxError) as info:
            parse_scalar(text, C2)
        assert info.value.position == position

    def test_expected_tokens_reported(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse_scalar("x1 +", C2)
        assert "identifier" in info.value.expected

    @pytest.mark.parametrize("text, point, expected", [
        ("2**3**2", (0, 0), 512.0),          # right associative
        ("-x1**2", (3, 0), 9.0),             # unary minus binds tighter than **
        ("x1 - x2 - 1", (5, 1), 3.0),        # left associative
        ("x1/x2/2", (8, 2), 2.0),
        ("1 + 2*x1", (3, 0), 7.0),
        ("2.5e-1*x2", (0, 4), 1.0),
    ])
    def test_precedence_and_associativity(self, text, point, expected):
        assert E.eval_scalar(parse_scalar(text, C2), point) == pytest.approx(expected)


class TestEval:
    def test_spec_values(self):
        assert E.eval_scalar(parse_scalar("x1*x2 + sin(x3)", C3), (1, 2, math.pi / 2)) == 3.0
        assert E.eval_scalar(parse_scalar("exp(0)*x2", C2), (7, 3)) == 3.0

    @pytest.mark.parametrize("text, point, reason", [
        ("1/x1", (0, 5), "division by zero"),
        ("ln(x1 - 1)", (1, 0), "ln"),
        ("sqrt(x2)", (0, -1), "sqrt"),
        ("x1**-1", (0, 2), "power"),
    ])
    def test_eval_errors_name_the_subterm(self, text, point, reason):
        e = parse_scalar(text, C2)
        with pytest.raises(EvalError) as info:
            E.eval_scalar(e, point)
        assert reason in info.value.reason
        assert info.value.subterm is not None

    def test_wrong_point_length(self):
        with pytest.raises(ValueError):
            E.eval_scalar(parse_scalar("x2", C2), (1.0,))


class TestFolding:
    def test_identities(self):
        x1 = C2.var(0)
        assert E.mul(E.ZERO, x1) is E.ZERO
        assert E.add(x1, E.ZERO) is x1
        assert E.power(x1, 1) is x1
        assert E.mul(E.const(2), E.const(3)).value == 6.0

    def test_no_deep_canonicalisation(self):
        x1, x2 = C2.vars()
        assert E.add(x1, x2) is not E.add(x2, x1)
        assert not E.sub(x1, x1).is_zero()

    def test_hash_consing(self):
        x1, x2 = C2.vars()
        assert E.mul(x1, E.sin(x2)) is E.mul(x1, E.sin(x2))


class TestPartial:
    @pytest.mark.parametrize("text, i, expected", [
        ("x1**2", 0, "2*x1"),
        ("sin(x1*x2)", 1, "cos(x1*x2)*x1"),
        ("ln(x1)", 0, "1/x1"),
        ("x2", 0, "0"),
    ])
    def test_spec_examples(self, text, i, expected):
        assert E.to_text(E.partial(parse_scalar(text, C2), i)) == expected

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences(self, seed):
        rng = rng_for("fd", seed)
        e = random_poly(C3, rng, terms=5, max_degree=3)
        e = E.add(e, E.sin(E.mul(C3.var(0), e)))
        p = rng.uniform(-1, 1, size=3)
        for i in range(3):
            exact = E.eval_reference(E.partial(e, i), p)
            hi, lo = p.copy(), p.copy()
            hi[i] += 1e-5
            lo[i] -= 1e-5
            fd = (E.eval_reference(e, hi) - E.eval_reference(e, lo)) / 2e-5
            assert abs(exact - fd) <= 1e-6 * (1 + abs(exact))

    @pytest.mark.parametrize("seed", range(5))
    def test_mixed_partials_commute(self, seed):
        rng = rng_for("clairaut", seed)
        e = E.mul(random_poly(C3, rng, 4), E.exp(random_poly(C3, rng, 2)))
        pts = rng.uniform(-1, 1, size=(64, 3))
        for i in range(3):
            for j in range(i + 1, 3):
                a = E.partial(E.partial(e, i), j)
                b = E.partial(E.partial(e, j), i)
                vals, bad, _ = compile_roots([a, b]).evaluate(pts)
                assert not bad.any()
                np.testing.assert_allclose(vals[:, 0], vals[:, 1], rtol=1e-9, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(expression_text)
def test_print_parse_round_trip(text):
    first = parse_scalar(text, C3)
    printed = E.to_text(first)
    second = parse_scalar(printed, C3)
    assert E.to_text(second) == printed
    assert parse_scalar(E.to_text(second), C3) is second


@settings(max_examples=100, deadline=None)
@given(expression_text, st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_compiled_evaluation_matches_reference(text, point):
    e = parse_scalar(text, C3)
    try:
        expected = E.eval_reference(e, point)
    except (ArithmeticError, ValueError):
        expected = None
    if expected is not None and not math.isfinite(expected):
        expected = None
    if expected is None:
        with pytest.raises(EvalError):
            E.eval_scalar(e, point)
    else:
        assert E.eval_scalar(e, point) == pytest.approx(expected, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
class TestBackends:
    def test_values_agree_with_reference(self, backend):
        rng = rng_for("backend", backend)
        roots = [random_poly(C3, rng, 4, 3) for _ in range(5)]
        roots.append(E.div(E.sqrt(E.add(E.mul(C3.var(0), C3.var(0)), E.ONE)), C3.var(1)))
        pts = rng.uniform(-1, 1, size=(50, 3))
        vals, bad, _ = compile_roots(roots).evaluate(pts, backend=backend)
        assert not bad.any()
        for p, row in zip(pts, vals):
            for r, v in zip(roots, row):
                assert v == pytest.approx(E.eval_reference(r, p), rel=1e-12, abs=1e-14)

    def test_failures_flagged_per_point(self, backend):
        e = parse_scalar("ln(x1) + 1/x2", C2)
        pts = np.array([[1.0, 1.0], [-1.0, 1.0], [2.0, 0.0], [0.5, 2.0]])
        vals, bad, instr = compile_roots([e]).evaluate(pts, backend=backend)
        assert bad.tolist() == [False, True, True, False]
        assert (instr[bad] >= 0).all()
        assert vals[0, 0] == pytest.approx(1.0)


def test_backends_identical_bits():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled kernel not built")
    rng = rng_for("bits")
    roots = [random_poly(C3, rng, 6, 3) for _ in range(4)]
    pts = rng.uniform(-1, 1, size=(100, 3))
    prog = compile_roots(roots)
    a, _, _ = prog.evaluate(pts, backend="compiled")
    b, _, _ = prog.evaluate(pts, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)


def test_benchmark_script_runs(tmp_path, capsys):
    import importlib.util
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    out = tmp_path / "bench.json"
    bench.main(["--points", "64", "--repeat", "1", "--json", str(out)])
    import json
    rows = json.loads(out.read_text())
    assert len(rows) == 4
    for row in rows:
        assert row.get("max_rel_diff", 0.0) <= 1e-12
    capsys.readouterr()
