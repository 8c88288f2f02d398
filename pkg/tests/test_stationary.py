"""Tests for stationary-point enumeration, classification, and the oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lojax import (
    Problem,
    SpherePoint,
    SymMatrix,
    brute_force_stationary,
    classify,
    enumerate_stationary,
    make_case3,
    make_example1,
    make_random,
    sym_eigh,
)
from lojax.stationary import (
    CASE_G_ZERO,
    CASE_I,
    CASE_III_POSSIBLE,
    match_point_sets,
    nearest_stationary_point,
)


def kkt_residual(problem, sp) -> float:
    return float(
        np.linalg.norm(problem.A.mat @ sp.x + problem.g - sp.lam * sp.x)
    )


class TestEnumerateExample1:
    def test_exactly_two_points(self):
        p = make_example1()
        sset = enumerate_stationary(p)
        assert len(sset.points) == 2
        assert not sset.has_continuum
        lo, hi = sset.points
        assert_allclose(lo.x, [0.0, 1.0], atol=1e-10)
        assert lo.lam == pytest.approx(0.0, abs=1e-12)
        assert lo.f_value == pytest.approx(0.0, abs=1e-12)
        assert_allclose(hi.x, [0.0, -1.0], atol=1e-10)
        assert hi.lam == pytest.approx(2.0)
        # objective gap 2.0 against the global minimum (angle-grid oracle value)
        assert hi.f_value - lo.f_value == pytest.approx(2.0, abs=1e-12)

    def test_classification_tags(self):
        sset = enumerate_stationary(make_example1())
        lo, hi = sset.points
        assert lo.phi_singular and not lo.corollary2_holds
        assert lo.case_tag == CASE_III_POSSIBLE
        assert lo.predicted_theta == 0.75
        assert not hi.phi_singular
        assert hi.case_tag == CASE_I
        assert hi.predicted_theta == 0.5
        assert hi.sigma_plus == pytest.approx(1.0)
        assert hi.sigma_max == pytest.approx(2.0)


class TestEnumerateEigenvectorInstances:
    def test_diag_g_zero_four_points(self):
        p = Problem(A=SymMatrix(np.diag([1.0, 2.0])), g=np.zeros(2))
        sset = enumerate_stationary(p)
        assert len(sset.points) == 4
        # minimizers first: +-e1 with multiplier 1, then +-e2 with multiplier 2
        assert sset.points[0].f_value == pytest.approx(0.5)
        assert sset.points[1].f_value == pytest.approx(0.5)
        assert all(p_.lam == pytest.approx(1.0) for p_ in sset.points[:2])
        assert all(p_.lam == pytest.approx(2.0) for p_ in sset.points[2:])
        for sp in sset.points:
            assert np.max(np.abs(np.abs(sp.x) - np.array([1.0, 0.0]))) < 1e-9 or \
                np.max(np.abs(np.abs(sp.x) - np.array([0.0, 1.0]))) < 1e-9

    def test_g_zero_singular_shift_still_predicts_half(self):
        p = Problem(A=SymMatrix(np.diag([1.0, 2.0])), g=np.zeros(2))
        sp = classify(p, SpherePoint(np.array([1.0, 0.0])))
        assert sp.phi_singular  # shift by the eigenvalue itself
        assert sp.case_tag == CASE_G_ZERO
        assert sp.predicted_theta == 0.5

    def test_pure_linear_objective(self):
        # A = 0: the two stationary points are -g/|g| (min) and g/|g| (max);
        # the KKT relation A x + g = lam x forces lam = -+1 respectively.
        p = Problem(A=SymMatrix(np.zeros((2, 2))), g=np.array([1.0, 0.0]))
        sset = enumerate_stationary(p)
        assert len(sset.points) == 2
        mn, mx = sset.points
        assert_allclose(mn.x, [-1.0, 0.0], atol=1e-12)
        assert mn.lam == pytest.approx(-1.0)
        assert mn.f_value == pytest.approx(-1.0)
        assert_allclose(mx.x, [1.0, 0.0], atol=1e-12)
        assert mx.lam == pytest.approx(1.0)


class TestPredictedThetaTable:
    def test_singular_shift_with_definite_tangent_form(self):
        # Phi singular, g != 0, but the null direction is not tangent, so the
        # tangent form is definite and the prediction stays 1/2.
        x_star = np.array([0.6, 0.8])
        a = np.diag([0.0, 2.0])
        g = -a @ x_star  # makes x* stationary with multiplier 0
        p = Problem(A=SymMatrix(a), g=g)
        sp = classify(p, SpherePoint(x_star))
        assert sp.phi_singular
        assert not p.g_is_zero()
        assert sp.corollary2_holds
        assert sp.predicted_theta == 0.5

    def test_four_rows_of_the_table(self):
        # (phi_singular, g_zero, corollary2) -> predicted
        p = make_example1()
        lo, hi = enumerate_stationary(p).points
        assert (lo.phi_singular, lo.corollary2_holds) == (True, False)
        assert lo.predicted_theta == 0.75
        assert (hi.phi_singular, hi.predicted_theta) == (False, 0.5)
        pz = Problem(A=SymMatrix(np.diag([1.0, 2.0, 3.0])), g=np.zeros(3))
        for sp in enumerate_stationary(pz).points:
            assert sp.predicted_theta == 0.5

    def test_case3_designated_point(self):
        for seed in (1, 2, 3):
            p, x_star = make_case3(4, seed)
            sp = classify(p, x_star)
            assert sp.phi_singular
            assert not sp.corollary2_holds
            assert sp.case_tag == CASE_III_POSSIBLE
            assert sp.predicted_theta == 0.75
            assert sp.sigma_plus >= 0.4
            assert sp.sigma_max >= sp.sigma_plus


class TestEnumerateInvariants:
    @pytest.mark.parametrize("seed", range(8))
    def test_kkt_residual_and_multiplier_order(self, seed):
        p = make_random(7, seed)
        sset = enumerate_stationary(p)
        eigvals = sym_eigh(p.A).eigvals
        assert sset.points[0].lam <= eigvals[0] + 1e-8
        for sp in sset.points:
            assert kkt_residual(p, sp) <= 1e-9 * p.scale()
            grad = p.A.mat @ sp.x + p.g
            proj = grad - sp.x * (sp.x @ grad)
            assert np.linalg.norm(proj) <= 1e-8
            assert abs(sp.lam - sp.x @ grad) <= 1e-10

    def test_points_sorted_and_separated(self):
        p = make_random(9, 123)
        sset = enumerate_stationary(p)
        fvals = [sp.f_value for sp in sset.points]
        assert fvals == sorted(fvals)
        for i, a in enumerate(sset.points):
            for b in sset.points[i + 1 :]:
                assert np.linalg.norm(a.x - b.x) > 1e-6

    def test_deterministic(self):
        p = make_random(6, 77)
        s1 = enumerate_stationary(p)
        s2 = enumerate_stationary(p)
        assert len(s1.points) == len(s2.points)
        for a, b in zip(s1.points, s2.points):
            assert a.x.tobytes() == b.x.tobytes()

    def test_tol_validation(self):
        with pytest.raises(ValueError):
            enumerate_stationary(make_example1(), tol=1e-5)


class TestDegenerateBranch:
    def test_continuum_family(self):
        # repeated eigenvalue invisible to g: a circle of stationary points
        p = Problem(
            A=SymMatrix(np.diag([1.0, 1.0, 2.0])), g=np.array([0.0, 0.0, 0.5])
        )
        sset = enumerate_stationary(p)
        assert sset.has_continuum
        assert len(sset.continuum_families) == 1
        fam = sset.continuum_families[0]
        assert fam.lam == pytest.approx(1.0)
        assert fam.dimension == 2
        assert fam.radius == pytest.approx(np.sqrt(0.75))
        reps = [sp for sp in sset.points if not sp.is_isolated]
        assert len(reps) == 4
        for sp in reps:
            assert fam.distance(sp.x) <= 1e-9
            assert sp.f_value == pytest.approx(0.375)
        # global minimum is on the family; lam == lambda_min(A) exactly here
        assert sset.points[0].lam == pytest.approx(1.0)
        isolated = [sp for sp in sset.points if sp.is_isolated]
        assert len(isolated) == 2
        # oracle cross-check: brute-force points near the family or the poles
        oracle = brute_force_stationary(p, grid_density=20000)
        for sp in oracle.points:
            near_family = fam.distance(sp.x) <= 1e-6
            near_isolated = any(
                np.linalg.norm(sp.x - q.x) <= 1e-6 for q in isolated
            )
            assert near_family or near_isolated

    def test_dimension_one_hard_case_is_isolated(self):
        # g orthogonal to a simple eigenvector: +- pair, no continuum
        p = Problem(
            A=SymMatrix(np.diag([0.0, 1.0, 3.0])), g=np.array([0.0, 0.4, 0.4])
        )
        sset = enumerate_stationary(p)
        assert not sset.has_continuum
        hard = [sp for sp in sset.points if abs(sp.lam) <= 1e-9]
        assert len(hard) == 2
        for sp in hard:
            assert sp.is_isolated
            assert abs(sp.x[0]) > 0.5  # carries the leftover norm on e1

    def test_full_sphere_of_minimizers(self):
        # A = I, g = 0: every feasible point is stationary
        p = Problem(A=SymMatrix(np.eye(3)), g=np.zeros(3))
        sset = enumerate_stationary(p)
        assert sset.has_continuum
        assert sset.continuum_families[0].dimension == 3
        for sp in sset.points:
            assert sp.f_value == pytest.approx(0.5)


class TestBruteForceOracle:
    def test_example1_grid(self):
        sset = brute_force_stationary(make_example1(), grid_density=10000)
        assert len(sset.points) == 2
        assert_allclose(sset.points[0].x, [0.0, 1.0], atol=1e-8)
        assert_allclose(sset.points[1].x, [0.0, -1.0], atol=1e-8)

    def test_diag_symmetry(self):
        p = Problem(A=SymMatrix(np.diag([1.0, 2.0])), g=np.zeros(2))
        sset = brute_force_stationary(p)
        assert len(sset.points) == 4

    def test_matches_enumeration_n2(self):
        for seed in range(20):
            p = make_random(2, seed)
            assert match_point_sets(
                enumerate_stationary(p), brute_force_stationary(p)
            ), f"seed {seed}"

    def test_matches_enumeration_n3(self):
        for seed in range(6):
            p = make_random(3, seed)
            assert match_point_sets(
                enumerate_stationary(p), brute_force_stationary(p)
            ), f"seed {seed}"

    def test_rejects_large_dimension(self):
        with pytest.raises(ValueError):
            brute_force_stationary(make_random(4, 0))


class TestHelpers:
    def test_nearest_stationary_point(self):
        p = make_example1()
        sset = enumerate_stationary(p)
        near = nearest_stationary_point(sset, np.array([0.1, 0.99]))
        assert_allclose(near.x, [0.0, 1.0], atol=1e-12)

    def test_classify_rejects_nonstationary(self):
        p = make_example1()
        with pytest.raises(ValueError):
            classify(p, SpherePoint(np.array([1.0, 0.0])))
