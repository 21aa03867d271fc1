import math

import numpy as np
import pytest

from zetaglue.adiabatic import (
    consistency_triangle_gap,
    extrapolate,
    half_fiber_heat_trace,
    predicted_bfk_constant,
    predicted_dn_limit,
    predicted_main_limit,
    relative_heat_trace,
    sweep,
    verify_bfk_corollary,
    verify_lemma_cancellation,
    verify_smalltime_largetime_split,
    verify_theorem_dn,
    verify_theorem_main,
    _log_abs_deviation,
)
from zetaglue.glue import GlueGeometry
from zetaglue.spectral_core import FiberSpectrum


class TestSweep:
    def test_rows_sorted_and_complete(self, std_fiber, std_geom):
        res = sweep(std_geom(), std_fiber, R_grid=(8.0, 4.0, 16.0))
        assert res.Rs == (4.0, 8.0, 16.0)
        assert not any(r.failed for r in res.rows)

    def test_scaled_ratio_monotone_toward_limit(self, std_fiber, std_geom):
        res = sweep(std_geom(), std_fiber)
        vals = res.column("scaled_ratio")
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert all(v < 0.125 for v in vals)

    def test_bfk_constant_per_row(self, std_fiber, std_geom):
        res = sweep(std_geom(), std_fiber)
        for r in res.rows:
            assert abs(r.bfk_ratio - 0.0625) < 1e-12

    def test_trivial_scaling_without_kernel(self):
        fib = FiberSpectrum.finite([(1.0, 1)])
        g = GlueGeometry(1.0, 2.0, 4.0)
        res = sweep(g, fib, R_grid=(4.0, 8.0))
        for r in res.rows:
            plain = math.exp(r.log_det_M - r.log_det_M1 - r.log_det_M2)
            assert abs(r.scaled_ratio - plain) < 1e-15

    def test_threaded_matches_serial(self, std_fiber, std_geom):
        a = sweep(std_geom(), std_fiber, threads=1)
        b = sweep(std_geom(), std_fiber, threads=4)
        assert a.rows == b.rows


class TestExtrapolate:
    def test_recovers_power_series(self):
        Rs = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
        vals = 3.0 - 1.2 / Rs + 0.7 / Rs ** 2 - 0.3 / Rs ** 3
        fit = extrapolate(Rs, vals)
        assert abs(fit.limit - 3.0) < 1e-10
        assert abs(fit.coeffs[0] - 3.0) < 1e-3
        assert 0.8 <= fit.convergence_exponent <= 1.2

    def test_uncertainty_formula(self):
        Rs = np.array([4.0, 8.0, 16.0, 32.0])
        vals = 1.0 + 2.0 / Rs
        fit = extrapolate(Rs, vals)
        expect = abs(fit.coeffs[1]) / 32.0 + abs(fit.coeffs[2]) / 32.0 ** 2
        assert abs(fit.uncertainty - expect) < 1e-12

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            extrapolate([4.0, 8.0], [1.0, 2.0])


class TestPredictions:
    def test_standard_instance(self, std_fiber, std_geom):
        g = std_geom()
        assert abs(predicted_main_limit(g, std_fiber) - 0.125) < 1e-14
        assert abs(predicted_dn_limit(g, std_fiber) - 2.0) < 1e-13
        assert abs(predicted_bfk_constant(std_fiber) - 0.0625) < 1e-15

    def test_half_turn(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi,))
        assert abs(predicted_main_limit(g, std_fiber) - 0.25) < 1e-14
        assert abs(predicted_dn_limit(g, std_fiber) - 4.0) < 1e-13

    def test_single_zero_mode(self):
        fib = FiberSpectrum.finite([(0.0, 1)])
        assert abs(predicted_bfk_constant(fib) - 0.25) < 1e-15

    def test_circle_fiber(self, circle_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        expect = 0.25 * (2 * math.pi) ** 2 * 0.5  # 2^{-2} sqrt((2pi)^4) /2
        assert abs(predicted_main_limit(g, circle_fiber) - expect) < 1e-12
        assert abs(expect - math.pi ** 2 / 2) < 1e-12
        assert abs(predicted_bfk_constant(circle_fiber) - 1.0) < 1e-15

    @pytest.mark.parametrize("theta", [0.4, math.pi / 2, math.pi, 5.0])
    def test_consistency_triangle(self, std_fiber, theta):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(theta,))
        assert consistency_triangle_gap(g, std_fiber) < 1e-12


class TestTheoremVerifiers:
    def test_main_standard(self, std_fiber, std_geom):
        check = verify_theorem_main(sweep(std_geom(), std_fiber))
        assert check.passed
        assert abs(check.predicted - 0.125) < 1e-14
        assert check.extrapolation_gap < 1e-4
        assert check.exponent_ok

    def test_dn_standard(self, std_fiber, std_geom):
        check = verify_theorem_dn(sweep(std_geom(), std_fiber))
        assert check.passed
        assert abs(check.predicted - 2.0) < 1e-13
        assert check.extrapolation_gap < 1e-4

    def test_main_half_turn(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi,))
        check = verify_theorem_main(sweep(g, std_fiber))
        assert check.passed and abs(check.predicted - 0.25) < 1e-14

    def test_dn_half_turn(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi,))
        check = verify_theorem_dn(sweep(g, std_fiber))
        assert check.passed and abs(check.predicted - 4.0) < 1e-13

    def test_circle_fiber_both(self, circle_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        res = sweep(g, circle_fiber)
        main = verify_theorem_main(res, tol=1e-3)
        assert main.passed
        assert abs(main.fit.limit - math.pi ** 2 / 2) < 1e-3

    def test_bfk_corollary(self, std_fiber, std_geom):
        check = verify_bfk_corollary(sweep(std_geom(), std_fiber))
        assert check.passed and check.max_rel_dev < 1e-9

    def test_bfk_corollary_single_mode(self):
        fib = FiberSpectrum.finite([(0.0, 1)])
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        check = verify_bfk_corollary(sweep(g, fib))
        assert check.passed and abs(check.predicted - 0.25) < 1e-15

    def test_bfk_corollary_circle(self, circle_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        check = verify_bfk_corollary(sweep(g, circle_fiber), rel_tol=1e-6)
        assert check.passed
        assert abs(check.predicted - 1.0) < 1e-15


class TestHeatCancellation:
    def test_relative_trace_value(self, std_fiber):
        # exact image cancellation leaves one cross-section copy
        g = GlueGeometry(1.0, 2.0, 6.0, holonomy=(math.pi / 2,))
        val = relative_heat_trace(g, std_fiber, 1.0)
        assert abs(val - (1.0 + math.exp(-1.0))) < 1e-10
        assert abs(val - 1.367879) < 1e-6

    def test_half_fiber_trace(self, std_fiber):
        for t in (0.25, 1.0, 4.0):
            assert abs(half_fiber_heat_trace(std_fiber, t)
                       - (1.0 + math.exp(-t))) < 1e-15

    def test_half_fiber_trace_circle(self, circle_fiber):
        direct = sum(math.exp(-0.5 * n * n) for n in range(-40, 41))
        assert abs(half_fiber_heat_trace(circle_fiber, 0.5) - direct) < 1e-12

    def test_lemma_report(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        rep = verify_lemma_cancellation(g, std_fiber)
        assert rep.c2_hat >= 0.5
        assert rep.max_violation_factor <= 2.0
        assert rep.float_crosscheck_gap < 1e-6
        assert rep.ok()

    def test_deviation_superpolynomial_at_small_t(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        lg1, _ = _log_abs_deviation(g, std_fiber, 0.1)
        lg2, _ = _log_abs_deviation(g, std_fiber, 0.05)
        # log|dev| ~ -c/t: halving t nearly doubles the exponent
        assert lg2 < 1.8 * lg1

    def test_image_form_matches_direct_subtraction(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,))
        for t in (6.0, 10.0):
            lg, sign = _log_abs_deviation(g, std_fiber, t)
            direct = (relative_heat_trace(g, std_fiber, t)
                      - half_fiber_heat_trace(std_fiber, t))
            assert abs(sign * math.exp(lg) - direct) < 1e-8 * abs(direct)


class TestSplit:
    def test_sum_reproduces_closed_ratio(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 8.0, holonomy=(math.pi / 2,))
        rep = verify_smalltime_largetime_split(g, std_fiber)
        assert rep.sum_vs_closed_gap < 1e-6

    def test_asymptote_at_large_stretch(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 64.0, holonomy=(math.pi / 2,))
        rep = verify_smalltime_largetime_split(g, std_fiber)
        assert rep.sum_vs_closed_gap < 1e-6
        # h log R - log(1/8) reproduced within the 1/R band
        assert rep.asymptote_gap < 0.025
        assert rep.large_limit_value == pytest.approx(
            2 * math.log(2.0) - math.log(0.5), abs=1e-12)

    def test_window_gaps_shrink(self, std_fiber):
        g8 = verify_smalltime_largetime_split(
            GlueGeometry(1.0, 2.0, 8.0, holonomy=(math.pi / 2,)), std_fiber)
        g32 = verify_smalltime_largetime_split(
            GlueGeometry(1.0, 2.0, 32.0, holonomy=(math.pi / 2,)), std_fiber)
        assert g32.small_gap < g8.small_gap
        assert g32.large_gap < g8.large_gap

    def test_epsilon_pieces_recorded(self, std_fiber):
        g = GlueGeometry(1.0, 2.0, 8.0, holonomy=(math.pi / 2,))
        a = verify_smalltime_largetime_split(g, std_fiber, epsilon=0.25)
        b = verify_smalltime_largetime_split(g, std_fiber, epsilon=0.4)
        # individual windows depend on epsilon, the sum does not
        assert abs(a.small_raw - b.small_raw) > 1e-3
        assert abs(a.sum_quadrature - b.sum_quadrature) < 1e-6


class TestGeneralizedInstances:
    def test_two_zero_modes_with_distinct_phases(self):
        from zetaglue.glue import bfk_ratio
        from zetaglue.scattering import det_L_identity

        fib = FiberSpectrum.finite([(0.0, 2), (1.0, 1)])
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 3, 2.2))
        assert abs(bfk_ratio(g, fib) - 2.0 ** -6) < 1e-12
        expect = (2.0 ** -4 * math.sin(math.pi / 6) ** 2
                  * math.sin(1.1) ** 2)
        assert abs(predicted_main_limit(g, fib) - expect) < 1e-14
        res = sweep(g, fib)
        assert verify_theorem_main(res).passed
        assert verify_theorem_dn(res).passed
        assert det_L_identity(g).ok

    def test_diagonal_holonomy_threads_through(self):
        from zetaglue.glue import bfk_ratio

        fib = FiberSpectrum.finite([(0.0, 1), (1.0, 1)])
        g = GlueGeometry(1.0, 2.0, 4.0, holonomy=(math.pi / 2,),
                         nonzero_phases={0: 1.0})
        # the gluing constant is gauge-independent
        assert abs(bfk_ratio(g, fib) - 0.0625) < 1e-12
        assert verify_theorem_main(sweep(g, fib)).passed


def test_sweep_row_failure_is_marked():
    from zetaglue.adiabatic import _sweep_row

    fib = FiberSpectrum.finite([(0.0, 1)])
    bad = GlueGeometry(1.0, 2.0, 4.0, holonomy=(0.0,))
    row = _sweep_row(bad, fib, 2)
    assert row.failed
    assert "zero mode" in row.error
    assert math.isnan(row.scaled_ratio)
