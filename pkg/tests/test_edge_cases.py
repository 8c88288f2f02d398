"""Edge-case behavior: near-tangent families, error paths, reproducibility."""

import numpy as np
import pytest

from lojax import (
    Problem,
    SpherePoint,
    SymMatrix,
    brute_force_stationary,
    classify,
    enumerate_stationary,
    make_case3,
    make_example1,
    solve_rgd,
    sym_eigh,
)
from lojax import cli, descent, linalg, loja
from lojax.descent import StopReason
from lojax.linalg import JacobiConvergenceError
from lojax.stationary import match_point_sets


class TestNearTangentFamily:
    def test_spurious_candidate_dropped_and_oracle_agrees(self):
        # leftover radius^2 of the invisible cluster sits in (-tol, 0): the
        # family candidate is not feasible-stationary and must be discarded
        # without failing the enumeration
        eps = 1.25e-8
        p = Problem(
            A=SymMatrix(np.diag([0.0, 1.0, 3.0])),
            g=np.array([0.0, 0.8, 1.8 * (1.0 + eps)]),
        )
        sset = enumerate_stationary(p)
        scale = p.scale()
        for sp in sset.points:
            resid = np.linalg.norm(p.A.mat @ sp.x + p.g - sp.lam * sp.x)
            assert resid <= 1e-9 * scale
        assert match_point_sets(sset, brute_force_stationary(p, 40000), tol=1e-5)

    def test_exact_tangency_keeps_the_point(self):
        # radius^2 == 0 up to rounding: the fixed part alone is stationary
        p = Problem(
            A=SymMatrix(np.diag([0.0, 1.0, 3.0])),
            g=np.array([0.0, 0.8, 1.8]),
        )
        sset = enumerate_stationary(p)
        hard = [sp for sp in sset.points if abs(sp.lam) < 1e-6]
        assert len(hard) == 1
        np.testing.assert_allclose(hard[0].x, [0.0, -0.8, -0.6], atol=1e-9)


class TestErrorPaths:
    def test_jacobi_cap_carries_residual(self, monkeypatch):
        monkeypatch.setattr(linalg, "_JACOBI_MAX_SWEEPS", 0)
        rng = np.random.default_rng(0)
        m = rng.standard_normal((6, 6))
        with pytest.raises(JacobiConvergenceError) as exc:
            sym_eigh(SymMatrix(m + m.T))
        assert exc.value.residual > 0.0
        assert exc.value.target > 0.0

    def test_backtracking_exhaustion_is_a_stop_not_a_crash(self, monkeypatch):
        monkeypatch.setattr(descent, "_MAX_BACKTRACKS", 0)
        p = make_example1()
        trace = solve_rgd(p, SpherePoint(np.array([0.6, 0.8])), max_iters=50)
        assert trace.stop_reason is StopReason.STALLED_STEP
        assert trace.n_steps == 0


class TestReproducibility:
    def test_estimate_output_bytes_stable(self, tmp_path):
        prob = tmp_path / "p.json"
        cli.main(["gen", "--kind", "example1", "--output", str(prob), "--quiet"])
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code = cli.main([
                "estimate", "--input", str(prob), "--point-index", "0",
                "--samples", "300", "--output", str(out), "--quiet",
            ])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_certify_output_bytes_stable(self, tmp_path):
        prob = tmp_path / "p.json"
        cli.main(["gen", "--kind", "gzero", "--n", "3", "--seed", "2",
                  "--output", str(prob), "--quiet"])
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert cli.main([
                "certify", "--input", str(prob), "--samples", "300",
                "--output", str(out), "--quiet",
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestCaseThreeTightness:
    def test_trial_half_ratio_blows_up_along_probes(self):
        # at a predicted-3/4 point, the trial exponent 1/2 must fail by a
        # growing margin as the probe radius shrinks
        for seed in (1, 2):
            p, x_star = make_case3(4, seed)
            sp = classify(p, x_star)
            batch = loja.collect_samples(
                p, sp, m_per_radius=500, seed=0, sampling="null_probes"
            )
            assert loja.trial_ratio_growth(batch, 0.5) >= 5.0
            assert loja.trial_ratio_growth(batch, 0.75) <= 1.1
