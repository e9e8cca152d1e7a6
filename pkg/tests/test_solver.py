"""Outer loop: multiplier ascent from distortion targets, sweeps."""

import os

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import oracle_lagrangian_min
from graywyner import ba
from graywyner.model import (
    JointPmf,
    Multipliers,
    Weights,
    dsbs,
    hamming_distortion,
)
from graywyner.solver import (
    SWEEP_CSV_HEADER,
    OuterConfig,
    rd_from_multipliers,
    solve_rd,
    sweep,
)

UNIT = Weights(1.0, 1.0, 1.0)
FAST = OuterConfig(inner=ba.BaConfig(epsilon=1e-6, max_iterations=30))


def dual_value_oracle(pmf, dist, weights, targets, b_grid=None):
    """max_b L*(b) - b . D by direct search with the independent
    prior-grid oracle as the inner minimization (2x2 sources only)."""
    t1, t2 = targets

    def neg_dual(b):
        b1, b2 = max(b[0], 0.0), max(b[1], 0.0)
        lstar = oracle_lagrangian_min(pmf, dist, weights,
                                      Multipliers(b1, b2), coarse=9)
        return -(lstar - b1 * t1 - b2 * t2)

    if b_grid is None:
        b_grid = [0.5, 1.5, 3.0, 5.0]
    best_v, best_b = -np.inf, None
    for b1 in b_grid:
        for b2 in b_grid:
            v = -neg_dual((b1, b2))
            if v > best_v:
                best_v, best_b = v, (b1, b2)
    res = minimize(neg_dual, best_b, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 300})
    return max(best_v, -float(res.fun))


class TestOuterConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            OuterConfig(epsilon_d=0.0)
        with pytest.raises(ValueError):
            OuterConfig(gamma0=-1.0)
        with pytest.raises(ValueError):
            OuterConfig(decay=0.0)
        with pytest.raises(ValueError):
            OuterConfig(max_outer=0)


class TestRdFromMultipliers:
    def test_zero_beta_zero_rate(self, dsbs_pmf, hamming2):
        res = rd_from_multipliers(dsbs_pmf, hamming2, UNIT,
                                  Multipliers(0.0, 0.0))
        assert res.rd_value < 1e-6

    def test_dual_consistency(self, dsbs_pmf, hamming2):
        """At fixed multipliers, rd = L* - b . D_achieved exactly."""
        mult = Multipliers(5.0, 5.0)
        res = rd_from_multipliers(
            dsbs_pmf, hamming2, UNIT, mult,
            ba.BaConfig(epsilon=1e-10, max_iterations=3000))
        want = (res.lagrangian_value - mult.b1 * res.achieved[0]
                - mult.b2 * res.achieved[1])
        assert abs(res.rd_value - want) < 1e-12

    def test_dsbs_beta55_vs_oracle(self, dsbs_pmf, hamming2):
        mult = Multipliers(5.0, 5.0)
        res = rd_from_multipliers(
            dsbs_pmf, hamming2, UNIT, mult,
            ba.BaConfig(epsilon=1e-10, max_iterations=3000))
        oracle = oracle_lagrangian_min(dsbs_pmf, hamming2, UNIT, mult)
        assert abs(res.lagrangian_value - oracle) < 1e-3


class TestSolveRd:
    def test_targets_at_dmax_give_zero(self, dsbs_pmf, hamming2):
        res = solve_rd(dsbs_pmf, hamming2, UNIT, (0.5, 0.5), FAST)
        assert res.converged
        assert res.rd_value < 1e-6
        assert res.multipliers.b1 == 0.0 and res.multipliers.b2 == 0.0

    def test_invalid_targets(self, dsbs_pmf, hamming2):
        with pytest.raises(ValueError):
            solve_rd(dsbs_pmf, hamming2, UNIT, (0.0, 0.3), FAST)

    def test_dsbs_p09_targets_01_vs_bruteforce(self, hamming2):
        pmf = dsbs(0.9)
        res = solve_rd(pmf, hamming2, UNIT, (0.1, 0.1), FAST)
        assert res.converged
        want = dual_value_oracle(pmf, hamming2, UNIT, (0.1, 0.1))
        assert abs(res.rd_value - want) < 2e-3

    def test_achieved_within_tolerance(self, dsbs_pmf, hamming2):
        res = solve_rd(dsbs_pmf, hamming2, UNIT, (0.2, 0.3), FAST)
        assert res.converged
        assert abs(res.achieved[0] - 0.2) <= FAST.epsilon_d
        assert abs(res.achieved[1] - 0.3) <= FAST.epsilon_d

    def test_outer_budget_on_corpus(self, hamming2):
        """Every corpus instance converges within 100 outer iterations at
        epsilon_d = 1e-4, with the 30-iteration warm-started inner loop."""
        rng = np.random.default_rng(5)
        cases = [
            (JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]])), UNIT, (0.2, 0.3)),
            (JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]])),
             Weights(1, 0.9, 0.8), (0.1, 0.1)),
            (dsbs(0.9), UNIT, (0.1, 0.1)),
        ]
        for _ in range(4):
            probs = rng.random((2, 2))
            probs /= probs.sum()
            cases.append((JointPmf(probs), UNIT, (0.15, 0.25)))
        for pmf, w, t in cases:
            res = solve_rd(pmf, hamming2, w, t, FAST)
            assert res.converged, (t, res.notes)
            assert res.outer_iterations <= 100

    def test_slack_constraint_at_zero_multiplier(self, hamming2):
        """A target below d_max can still be slack at the optimum; the
        solver must recognize b_i = 0 with achieved <= target as converged."""
        rng = np.random.default_rng(5)
        rng.integers(2, 4, 2)
        probs = rng.random((2, 2))
        probs /= probs.sum()
        # construct: generous D2 target relative to D1
        pmf = JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]]))
        res = solve_rd(pmf, hamming2, Weights(1, 2, 0.5), (0.05, 0.4), FAST)
        assert res.converged
        assert res.multipliers.b2 == 0.0
        assert res.achieved[1] <= 0.4 + FAST.epsilon_d


class TestStructuralProperties:
    def test_alpha_scaling_linearity(self, dsbs_pmf, hamming2):
        res1 = solve_rd(dsbs_pmf, hamming2, UNIT, (0.2, 0.2), FAST)
        res3 = solve_rd(dsbs_pmf, hamming2, Weights(3.0, 3.0, 3.0),
                        (0.2, 0.2), FAST)
        assert abs(res3.rd_value - 3.0 * res1.rd_value) < 1e-6 * max(
            1.0, res3.rd_value)

    def test_distortion_monotonicity(self, dsbs_pmf, hamming2):
        values = [
            solve_rd(dsbs_pmf, hamming2, UNIT, (d, 0.25), FAST).rd_value
            for d in (0.1, 0.2, 0.3, 0.4)
        ]
        assert all(a >= b - 1e-6 for a, b in zip(values, values[1:]))

    def test_convexity_probe(self, dsbs_pmf, hamming2):
        d_lo, d_hi = 0.1, 0.4
        r_lo = solve_rd(dsbs_pmf, hamming2, UNIT, (d_lo, 0.25), FAST).rd_value
        r_hi = solve_rd(dsbs_pmf, hamming2, UNIT, (d_hi, 0.25), FAST).rd_value
        r_mid = solve_rd(dsbs_pmf, hamming2, UNIT,
                         ((d_lo + d_hi) / 2, 0.25), FAST).rd_value
        assert r_mid <= (r_lo + r_hi) / 2 + 1e-4

    def test_swap_symmetry(self, dsbs_pmf, hamming2):
        """(a1, D1) <-> (a2, D2) swap leaves rd unchanged for the
        symmetric DSBS source."""
        r12 = solve_rd(dsbs_pmf, hamming2, Weights(1, 0.9, 0.8),
                       (0.15, 0.3), FAST)
        r21 = solve_rd(dsbs_pmf, hamming2, Weights(1, 0.8, 0.9),
                       (0.3, 0.15), FAST)
        assert abs(r12.rd_value - r21.rd_value) < 1e-4

    def test_dual_consistency_at_targets(self, dsbs_pmf, hamming2):
        """Converged solve: rd = L*(b) - b . D_target within epsilon-scale
        slack (achieved distortions are within epsilon_d of targets)."""
        res = solve_rd(dsbs_pmf, hamming2, UNIT, (0.2, 0.3), FAST)
        assert res.converged
        recon = (res.lagrangian_value - res.multipliers.b1 * 0.2
                 - res.multipliers.b2 * 0.3)
        assert abs(res.rd_value - recon) < 1e-3


class TestSweep:
    def test_rows_in_order_with_header_fields(self, dsbs_pmf, hamming2):
        grid = [0.1, 0.2, 0.3]
        rows = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1", grid,
                     FAST)
        assert [r["axis_value"] for r in rows] == grid
        fields = SWEEP_CSV_HEADER.split(",")
        for row in rows:
            for f in fields:
                assert f in row

    def test_monotone_in_d1(self, dsbs_pmf, hamming2):
        rows = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1",
                     [0.1, 0.2, 0.3], FAST)
        rd = [r["rd_nats"] for r in rows]
        assert rd[0] >= rd[1] >= rd[2]

    def test_alpha_scale_axis_linear(self, dsbs_pmf, hamming2):
        rows = sweep(dsbs_pmf, hamming2, UNIT, (0.2, 0.2), "alpha_scale",
                     [1.0, 2.0], FAST)
        assert abs(rows[1]["rd_nats"] - 2 * rows[0]["rd_nats"]) < 1e-5

    def test_error_row_continues(self, dsbs_pmf, hamming2):
        rows = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1",
                     [0.2, -0.5, 0.3], FAST)
        assert len(rows) == 3
        assert not rows[1]["converged"] and rows[1]["error"]
        assert rows[0]["converged"] and rows[2]["converged"]

    def test_empty_grid_rejected(self, dsbs_pmf, hamming2):
        with pytest.raises(ValueError):
            sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1", [], FAST)

    def test_unknown_axis_rejected(self, dsbs_pmf, hamming2):
        rows = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "bogus",
                     [0.2], FAST)
        assert not rows[0]["converged"] and "axis" in rows[0]["error"]

    def test_thread_determinism(self, dsbs_pmf, hamming2, monkeypatch):
        grid = [0.1, 0.2, 0.3, 0.4]
        monkeypatch.setenv("GW_THREADS", "1")
        seq = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1", grid, FAST)
        monkeypatch.setenv("GW_THREADS", "4")
        par = sweep(dsbs_pmf, hamming2, UNIT, (0.25, 0.25), "D1", grid, FAST)
        for a, b in zip(seq, par):
            assert a == b
