"""Tests for the retracted descent solver and rate classification."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lojax import (
    Problem,
    SpherePoint,
    SymMatrix,
    classify_rate,
    enumerate_stationary,
    make_example1,
    make_random,
    rgd_step,
    solve_rgd,
    tail_step_fraction,
    theta_to_regime,
    verify_conditions,
)
from lojax.descent import (
    DescentTrace,
    NotConvergedError,
    Regime,
    StopReason,
)


class TestRgdStep:
    def test_stationary_point_is_fixed(self):
        p = make_example1()
        x = SpherePoint(np.array([0.0, 1.0]))
        assert_allclose(rgd_step(p, x, 0.1).x, x.x, atol=1e-15)

    def test_moves_toward_minimizer_on_example1(self):
        p = make_example1()
        x = SpherePoint(np.array([1.0, 0.0]))
        stepped = rgd_step(p, x, 0.05)
        assert stepped.x[1] > 0.0  # second coordinate strictly increases

    def test_continuity_as_alpha_vanishes(self):
        p = make_example1()
        x = SpherePoint(np.array([0.6, 0.8]))
        for alpha in (1e-2, 1e-4, 1e-6):
            moved = rgd_step(p, x, alpha)
            assert np.linalg.norm(moved.x - x.x) <= 2.0 * alpha

    def test_rejects_nonpositive_alpha(self):
        p = make_example1()
        with pytest.raises(ValueError):
            rgd_step(p, SpherePoint(np.array([0.6, 0.8])), 0.0)


class TestSolveRgd:
    def test_stationary_start_stops_immediately(self):
        p = make_example1()
        trace = solve_rgd(p, SpherePoint(np.array([0.0, 1.0])))
        assert trace.n_steps == 0
        assert trace.stop_reason is StopReason.GRADIENT_TOLERANCE

    def test_monotone_decrease_and_feasibility(self):
        p = make_random(5, 2)
        trace = solve_rgd(p, SpherePoint.project(np.ones(5)), max_iters=2000)
        assert np.all(np.diff(trace.f_values) <= 0.0)
        norms = np.linalg.norm(trace.iterates, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12
        assert trace.C1_hat > 0.0
        assert np.isfinite(trace.C2_hat)

    def test_example1_quarter_circle_converges_to_minimizer(self):
        p = make_example1()
        x0 = SpherePoint(np.array([np.sin(1.0), np.cos(1.0)]))
        trace = solve_rgd(p, x0, max_iters=20000, grad_tol=0.0)
        assert np.linalg.norm(trace.iterates[-1] - np.array([0.0, 1.0])) < 0.02
        assert trace.f_values[-1] < 1e-8

    def test_recorded_f_tracks_objective(self):
        from lojax import objective

        p = make_random(4, 9)
        trace = solve_rgd(p, SpherePoint.project(np.arange(1.0, 5.0)), max_iters=500)
        f_direct = objective(p, SpherePoint(trace.iterates[-1]))
        assert trace.f_values[-1] == pytest.approx(f_direct, abs=1e-12)

    def test_thinning_beyond_ten_thousand(self):
        p = make_example1()
        x0 = SpherePoint(np.array([np.sin(1.0), np.cos(1.0)]))
        trace = solve_rgd(p, x0, max_iters=12000, grad_tol=0.0)
        assert trace.n_steps == 12000
        ks = trace.stored_steps
        assert np.all(np.diff(ks[ks <= 10000]) == 1)
        tail = ks[ks > 10000]
        assert np.all(np.diff(tail) % 10 == 0) or tail.size <= 2
        assert ks[-1] == 12000
        # scalar histories are never thinned
        assert trace.f_values.size == 12001
        assert trace.step_norms.size == 12000

    def test_option_validation(self):
        p = make_example1()
        x0 = SpherePoint(np.array([0.6, 0.8]))
        with pytest.raises(ValueError):
            solve_rgd(p, x0, backtrack_ratio=1.5)
        with pytest.raises(ValueError):
            solve_rgd(p, x0, armijo_c=0.0)
        with pytest.raises(ValueError):
            solve_rgd(p, x0, alpha0=-1.0)


class TestVerifyConditions:
    def test_solver_trace_has_no_violations(self):
        p = make_random(4, 5)
        trace = solve_rgd(p, SpherePoint.project(np.ones(4)), max_iters=1000)
        report = verify_conditions(trace)
        assert report.violations == []
        assert report.C1_hat > 0.0
        assert np.isfinite(report.C2_hat)

    def test_synthetic_uphill_step_is_flagged(self):
        p = make_random(4, 5)
        trace = solve_rgd(p, SpherePoint.project(np.ones(4)), max_iters=1000)
        dec_bad = trace.decreases.copy()
        k_bad = min(5, dec_bad.size - 1)
        dec_bad[k_bad] = -1.0  # inject an uphill step
        doctored = DescentTrace(
            iterates=trace.iterates,
            stored_steps=trace.stored_steps,
            f_values=trace.f_values,
            grad_norms=trace.grad_norms,
            step_norms=trace.step_norms,
            decreases=dec_bad,
            C1_hat=trace.C1_hat,
            C2_hat=trace.C2_hat,
            stop_reason=trace.stop_reason,
            options=trace.options,
        )
        report = verify_conditions(doctored)
        assert k_bad in report.violations

    def test_short_trace_rejected(self):
        p = make_example1()
        trace = solve_rgd(p, SpherePoint(np.array([0.0, 1.0])))
        with pytest.raises(ValueError):
            verify_conditions(trace)


class TestThetaToRegime:
    def test_table(self):
        assert theta_to_regime(0.0).regime is Regime.FINITE
        assert theta_to_regime(0.25).regime is Regime.LINEAR
        assert theta_to_regime(0.5).regime is Regime.LINEAR
        for theta, power in ((0.6, 2.0), (0.75, 0.5), (0.9, 0.125)):
            desc = theta_to_regime(theta)
            assert desc.regime is Regime.SUBLINEAR_POWER
            assert desc.power == pytest.approx(power)

    def test_domain(self):
        for bad in (-0.1, 1.0, 1.5):
            with pytest.raises(ValueError):
                theta_to_regime(bad)


def synthetic_trace(dists: np.ndarray) -> tuple[DescentTrace, SpherePoint]:
    """Circle trace whose distances to (0,1) follow the given sequence."""
    phis = 2.0 * np.arcsin(np.clip(dists / 2.0, 0.0, 1.0))
    iterates = np.column_stack([np.sin(phis), np.cos(phis)])
    k = dists.size
    steps = np.abs(np.diff(dists, append=dists[-1]))[: k - 1] + 1e-17
    f_values = np.linspace(1.0, 0.0, k)
    trace = DescentTrace(
        iterates=iterates,
        stored_steps=np.arange(k),
        f_values=f_values,
        grad_norms=np.ones(k),
        step_norms=steps,
        decreases=f_values[:-1] - f_values[1:],
        C1_hat=1.0,
        C2_hat=1.0,
        stop_reason=StopReason.MAX_ITERATIONS,
        options={},
    )
    return trace, SpherePoint(np.array([0.0, 1.0]))


class TestClassifyRate:
    def test_exact_power_law_recovered(self):
        # d at step index k equals 0.5 k^{-1/2} (index 0 sits outside the window)
        k = np.arange(0, 3001, dtype=float)
        trace, x_star = synthetic_trace(0.5 * np.maximum(k, 1.0) ** -0.5)
        report = classify_rate(trace, x_star)
        assert report.regime is Regime.SUBLINEAR_POWER
        assert report.fitted_power == pytest.approx(0.5, abs=0.01)
        assert report.residual <= 1e-6
        assert report.C3_hat is not None and np.isfinite(report.C3_hat)

    def test_exact_geometric_decay_recovered(self):
        k = np.arange(0, 120, dtype=float)
        trace, x_star = synthetic_trace(0.5 * 0.9**k)
        report = classify_rate(trace, x_star)
        assert report.regime is Regime.LINEAR
        assert report.fitted_Q == pytest.approx(0.9, abs=0.9 * 0.05)
        assert 0.0 < report.fitted_Q < 1.0

    def test_generating_regime_parameters_within_five_percent(self):
        for p_true in (0.4, 0.5, 1.0):
            k = np.arange(0, 2001, dtype=float)
            trace, x_star = synthetic_trace(0.3 * np.maximum(k, 1.0) ** -p_true)
            report = classify_rate(trace, x_star)
            assert report.regime is Regime.SUBLINEAR_POWER
            assert abs(report.fitted_power - p_true) <= 0.05 * p_true
        for q_true in (0.8, 0.95):
            k = np.arange(0, 400, dtype=float)
            trace, x_star = synthetic_trace(0.4 * q_true**k)
            report = classify_rate(trace, x_star)
            assert report.regime is Regime.LINEAR
            assert abs(report.fitted_Q - q_true) <= 0.05 * q_true

    def test_refuses_nonconverged_trace(self):
        trace, x_star = synthetic_trace(np.linspace(1.9, 1.2, 300))
        with pytest.raises(NotConvergedError):
            classify_rate(trace, x_star)

    def test_solver_end_to_end_linear_case(self):
        p = Problem(A=SymMatrix(np.diag([1.0, 2.0])), g=np.zeros(2))
        trace = solve_rgd(
            p, SpherePoint.project(np.array([0.6, 0.8])), max_iters=5000,
            grad_tol=1e-12,
        )
        sset = enumerate_stationary(p)
        from lojax.stationary import nearest_stationary_point

        target = nearest_stationary_point(sset, trace.iterates[-1])
        report = classify_rate(trace, target.point)
        assert report.regime is Regime.LINEAR
        assert report.fitted_Q < 1.0
        assert report.linear_residual < report.sublinear_residual


class TestTailStepFraction:
    def test_geometric_steps_have_negligible_tail(self):
        steps = 0.5**np.arange(200)
        trace = DescentTrace(
            iterates=np.zeros((2, 2)),
            stored_steps=np.array([0, 199]),
            f_values=np.zeros(201),
            grad_norms=np.zeros(201),
            step_norms=steps,
            decreases=np.zeros(200),
            C1_hat=1.0,
            C2_hat=1.0,
            stop_reason=StopReason.MAX_ITERATIONS,
            options={},
        )
        assert tail_step_fraction(trace) <= 1e-10

    def test_empty_trace(self):
        p = make_example1()
        trace = solve_rgd(p, SpherePoint(np.array([0.0, 1.0])))
        assert tail_step_fraction(trace) == 0.0
