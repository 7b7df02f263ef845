import math

import numpy as np
import pytest

from foliate import expr as E
from foliate.exterior import Form, d, dx
from foliate.expr import CoordinateSystem
from foliate.verify import (FAIL, INCONCLUSIVE, PASS, CheckResult, ReportDocument, SampleBox,
                            additive_terms, aggregate_status, check_nonvanishing, check_nonzero,
                            check_zero, combine, sample_points)

C3 = CoordinateSystem(["x1", "x2", "x3"])
BOX = SampleBox.cube(3)


class TestSampling:
    def test_deterministic(self):
        box = SampleBox([(0, 1)])
        a = sample_points(box, 3, 42)
        b = sample_points(box, 3, 42)
        assert a.tobytes() == b.tobytes()

    def test_matches_documented_stream(self):
        # lo + u*(hi-lo) with u from Generator(PCG64(seed)).random
        box = SampleBox([(-1, 1), (2, 4)])
        u = np.random.Generator(np.random.PCG64(7)).random((5, 2))
        expected = np.array([-1.0, 2.0]) + u * np.array([2.0, 2.0])
        np.testing.assert_array_equal(sample_points(box, 5, 7), expected)

    def test_seed_changes_points(self):
        assert not np.array_equal(sample_points(BOX, 4, 1), sample_points(BOX, 4, 2))

    def test_inside_box(self):
        box = SampleBox([(1, 2), (-3, -2), (0, 10)])
        pts = sample_points(box, 200, 3)
        assert (pts >= [1, -3, 0]).all() and (pts <= [2, -2, 10]).all()

    def test_n_zero_rejected(self):
        with pytest.raises(ValueError):
            sample_points(BOX, 0)

    @pytest.mark.parametrize("intervals", [[(1, 1)], [(2, 1)], []])
    def test_degenerate_box(self, intervals):
        with pytest.raises(ValueError):
            SampleBox(intervals)


class TestCheckZero:
    def test_zero_form(self):
        res = check_zero(Form(C3, 2), BOX)
        assert res.status == PASS and res.max_abs_residual == 0.0

    def test_dd_vanishes(self):
        x1, x2, _ = C3.vars()
        res = check_zero(d(d(dx(C3, 2) * E.mul(x1, x2))), BOX)
        assert res.passed and res.max_abs_residual <= 1e-12

    def test_singular_but_measure_zero(self):
        x1 = C3.var(0)
        res = check_zero(dx(C3, 1) * E.div(E.ONE, x1), BOX)
        assert res.status == FAIL
        assert res.max_abs_residual > 1.0
        assert res.points_rejected == 0

    def test_cancellation_judged_against_terms(self):
        # the leftover 1e-8 is rounding-sized next to terms of size 1e6
        x1 = C3.var(0)
        big = E.mul(E.const(1e6), E.add(E.const(2), x1))
        e = E.add(E.sub(big, big), E.const(1e-8))
        res = check_zero(e, BOX)
        assert res.magnitude_scale >= 1e6
        assert res.status == PASS

    def test_small_terms_do_not_hide_residual(self):
        # 1e-6 left over when the terms themselves are O(1) is a genuine failure
        x1 = C3.var(0)
        e = E.add(E.sub(x1, x1), E.const(1e-6))
        assert check_zero(e, BOX).status == FAIL

    def test_rejection_leads_to_inconclusive(self):
        x1 = C3.var(0)
        e = E.sub(E.ln(x1), E.ln(x1))           # undefined for x1 <= 0
        res = check_zero(e, SampleBox([(-1, 0.2), (0, 1), (0, 1)]))
        assert res.status == INCONCLUSIVE
        assert res.points_rejected > res.points_used

    def test_rejected_points_replaced(self):
        x1 = C3.var(0)
        e = E.sub(E.ln(x1), E.ln(x1))
        res = check_zero(e, SampleBox([(-0.1, 1), (0, 1), (0, 1)]))
        assert res.status == PASS
        assert res.points_used == 64 and res.points_rejected > 0

    @pytest.mark.parametrize("n", [8, 64, 256])
    def test_monotone_for_identities(self, n):
        x1, x2, x3 = C3.vars()
        e = E.sub(E.mul(E.sin(x1), E.sin(x1)), E.sub(E.ONE, E.mul(E.cos(x1), E.cos(x1))))
        assert check_zero(e, BOX, n=n).passed

    def test_reports_worst_point(self):
        x1 = C3.var(0)
        res = check_zero(x1, SampleBox([(0, 1), (0, 1), (0, 1)]))
        assert res.worst_point[0] == pytest.approx(res.max_abs_residual)


class TestOtherChecks:
    def test_nonvanishing(self):
        x1 = C3.var(0)
        assert check_nonvanishing(x1, SampleBox([(1, 2), (0, 1), (0, 1)])).passed
        assert not check_nonvanishing(E.sub(x1, x1), BOX).passed

    def test_nonzero(self):
        assert check_nonzero(dx(C3, 0), BOX).passed
        assert check_nonzero(Form(C3, 1), BOX).status == FAIL

    def test_additive_terms(self):
        x1, x2, x3 = C3.vars()
        e = E.sub(E.add(x1, E.mul(x2, x3)), E.neg(x1))
        terms = additive_terms(e)
        assert x1 in terms and E.mul(x2, x3) in terms
        assert len(terms) == 2


class TestReports:
    def test_aggregate(self):
        assert aggregate_status([PASS, PASS]) == PASS
        assert aggregate_status([PASS, INCONCLUSIVE]) == INCONCLUSIVE
        assert aggregate_status([INCONCLUSIVE, FAIL]) == FAIL
        assert aggregate_status([]) == PASS

    def test_combine_keeps_worst(self):
        a = CheckResult("a", PASS, 1e-12, 1.0, (0.0,), 64, 0)
        b = CheckResult("b", FAIL, 0.5, 2.0, (1.0,), 60, 4)
        c = combine("both", [a, b])
        assert c.status == FAIL and c.max_abs_residual == 0.5 and c.worst_point == (1.0,)

    def test_dict_round_trip(self):
        r = CheckResult("x", PASS, 1e-13, 3.0, (0.5, 0.25), 64, 2, note="ok")
        assert CheckResult.from_dict(r.to_dict()) == r

    def test_document(self):
        doc = ReportDocument("demo")
        doc.add(CheckResult("a", PASS, 0.0, 0.0, None, 64, 0))
        assert doc.overall == PASS
        doc.add(CheckResult("b", FAIL, math.inf, 0.0, None, 64, 0))
        assert doc.overall == FAIL
        assert doc["b"].status == FAIL
        with pytest.raises(KeyError):
            doc["missing"]
