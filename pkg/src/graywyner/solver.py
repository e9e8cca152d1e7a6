"""Outer loop: from target distortions to the weighted RD value.

The weighted RD value is the maximum over nonnegative multipliers of

    L*(b1, b2) - b1*D1 - b2*D2

so the solver runs a projected subgradient ascent on the multipliers around
the inner alternating minimization, warm-starting each inner run from the
previous prior, and reports the best dual value observed at the target
distortions.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import ba
from .model import (
    JointPmf,
    Multipliers,
    Weights,
    d_max,
    expected_distortions,
    rate_triple,
)

SWEEP_CSV_HEADER = (
    "axis_value,rd_nats,R0_nats,R1_nats,R2_nats,D1,D2,beta1,beta2,"
    "outer_iters,converged"
)


@dataclass
class RdResult:
    rd_value: float
    achieved: tuple
    multipliers: Multipliers
    rate_triple: tuple
    inner_state: ba.BaState
    outer_iterations: int
    converged: bool
    lagrangian_value: float
    notes: tuple = ()


@dataclass
class OuterConfig:
    epsilon_d: float = 1e-4
    gamma0: float = 2.0
    decay: float = 0.97
    max_outer: int = 100
    inner: ba.BaConfig = field(default_factory=ba.BaConfig)

    def __post_init__(self):
        if self.epsilon_d <= 0:
            raise ValueError("epsilon_d must be positive")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


def rd_from_multipliers(pmf, dist, weights, multipliers, inner=None):
    """Single inner run at fixed multipliers, reported at the ACHIEVED
    distortions: rd = L* - b1*D1_achieved - b2*D2_achieved."""
    inner = inner if inner is not None else ba.BaConfig()
    state = ba.minimize_lagrangian(pmf, dist, weights, multipliers, inner)
    ach = expected_distortions(pmf, state.coding, dist)
    rates = rate_triple(pmf, state.coding)
    rd = state.lagrangian_value - multipliers.b1 * ach[0] - multipliers.b2 * ach[1]
    return RdResult(
        rd_value=float(rd),
        achieved=ach,
        multipliers=multipliers,
        rate_triple=rates,
        inner_state=state,
        outer_iterations=1,
        converged=state.converged,
        lagrangian_value=state.lagrangian_value,
        notes=() if state.converged else ("inner loop did not converge",),
    )


def solve_rd(pmf, dist, weights, targets, config=None):
    """Projected subgradient ascent on the multipliers.

    b_i <- max(0, b_i + gamma_n_i * (D_i_achieved - D_i_target)) until, for
    each coordinate, |D_achieved - D_target| <= epsilon_d or the constraint
    is slack at b_i = 0 (achieved <= target), or max_outer is hit. The step
    sizes start at gamma0 and adapt per coordinate: a sign flip of the
    subgradient halves gamma_n_i (damping the oscillation a fixed schedule
    decays too slowly for), while a persistent sign relaxes it by decay^-4
    up to a cap (covering targets whose multipliers sit far from the start).
    Targets at or above the best-constant distortion pin the corresponding
    multiplier at 0 (constraint inactive). The reported rd is the best dual
    value observed over all evaluated multipliers, where each dual is
    certified through the mu-feasible lower bound (valid even for truncated
    inner runs); the operating point (rates, achieved distortions,
    multipliers) comes from the converged iterate, or from the best dual
    iterate when the loop hits max_outer.
    """
    config = config if config is not None else OuterConfig()
    t1, t2 = float(targets[0]), float(targets[1])
    if t1 <= 0 or t2 <= 0:
        raise ValueError("target distortions must be positive")
    dm1, dm2 = d_max(pmf, dist)
    notes = []
    pin1 = t1 >= dm1 - 1e-12
    pin2 = t2 >= dm2 - 1e-12
    if pin1:
        notes.append("target D1 at or above d_max; constraint inactive, beta1=0")
    if pin2:
        notes.append("target D2 at or above d_max; constraint inactive, beta2=0")
    b1 = 0.0 if pin1 else 1.0
    b2 = 0.0 if pin2 else 1.0
    inner = config.inner
    best = None  # (dual value, multipliers, state, achieved, n)
    converged = False
    n_done = 0
    prior = None
    gam = np.array([config.gamma0, config.gamma0])
    grow = min(config.decay**-4, 2.0)
    prev = np.zeros(2)
    for n in range(config.max_outer):
        if prior is not None:
            inner = replace(inner, init=prior)
        mult = Multipliers(b1, b2)
        state = ba.minimize_lagrangian(pmf, dist, weights, mult, inner)
        prior = state.prior
        ach = expected_distortions(pmf, state.coding, dist)
        # a certified dual value: the mu-feasible lower bound is valid even
        # when the inner run stopped on a plateau, whereas the raw L* of a
        # short warm-started run can overestimate the dual
        f = ba.update_f(state.prior, dist, weights, mult)
        try:
            lb = ba.lower_bound_value(pmf, f, weights, feas_tol=1e-6)
        except ba.FeasibilityError:
            lb = None
        if lb is not None:
            dual = lb - b1 * t1 - b2 * t2
            if best is None or dual > best[0]:
                best = (dual, mult, state, ach)
        n_done = n + 1
        g = np.array([ach[0] - t1, ach[1] - t2])
        ok1 = pin1 or abs(g[0]) <= config.epsilon_d
        ok2 = pin2 or abs(g[1]) <= config.epsilon_d
        # a constraint slack at b=0 is inactive at the optimum
        ok1 = ok1 or (b1 == 0.0 and g[0] <= config.epsilon_d)
        ok2 = ok2 or (b2 == 0.0 and g[1] <= config.epsilon_d)
        if ok1 and ok2:
            converged = True
            break
        flip = g * prev < 0
        same = g * prev > 0
        gam = np.where(flip, 0.5 * gam,
                       np.where(same, np.minimum(grow * gam, 50.0), gam))
        prev = g
        if not pin1:
            b1 = max(0.0, b1 + gam[0] * g[0])
        if not pin2:
            b2 = max(0.0, b2 + gam[1] * g[1])
    if best is None:
        # no iterate certified a lower bound (a short inner budget can leave
        # the mu triple slightly infeasible); polish extra inner rounds at
        # the final multipliers until the bound certifies
        p_state, p_ach, p_prior = state, ach, prior
        polish = replace(inner, epsilon=min(inner.epsilon, 1e-10),
                         max_iterations=max(inner.max_iterations, 200))
        budget = 3 * polish.max_iterations
        while budget > 0:
            p_state = ba.minimize_lagrangian(
                pmf, dist, weights, mult,
                replace(polish, init=p_prior,
                        max_iterations=min(polish.max_iterations, budget)))
            budget -= max(p_state.iteration, 1)
            p_prior = p_state.prior
            p_ach = expected_distortions(pmf, p_state.coding, dist)
            f = ba.update_f(p_state.prior, dist, weights, mult)
            try:
                lb = ba.lower_bound_value(pmf, f, weights, feas_tol=1e-6)
            except ba.FeasibilityError:
                continue
            best = (lb - b1 * t1 - b2 * t2, mult, p_state, p_ach)
            break
        else:
            best = (state.lagrangian_value - b1 * t1 - b2 * t2, mult, state,
                    ach)
            notes.append("dual value not certified by the mu lower bound")
    dual = best[0]
    if not converged:
        # fall back to the best-dual iterate's operating point
        _, mult, state, ach = best
        notes.append("outer loop did not reach the distortion tolerance")
    if not state.converged:
        notes.append("inner loop did not converge at the reported iterate")
    rates = rate_triple(pmf, state.coding)
    return RdResult(
        rd_value=float(max(dual, 0.0)),
        achieved=ach,
        multipliers=mult,
        rate_triple=rates,
        inner_state=state,
        outer_iterations=n_done,
        converged=converged and state.converged,
        lagrangian_value=state.lagrangian_value,
        notes=tuple(notes),
    )


def _sweep_point(axis, value, pmf, dist, weights, targets, config):
    t1, t2 = targets
    w = weights
    if axis == "D1":
        t1 = value
    elif axis == "D2":
        t2 = value
    elif axis == "alpha_scale":
        w = Weights(weights.a0 * value, weights.a1 * value, weights.a2 * value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return solve_rd(pmf, dist, w, (t1, t2), config)


def sweep(pmf, dist, weights, targets, axis, grid, config=None):
    """One solve per grid point along a single axis; rows in input order.

    axis is one of "D1", "D2", "alpha_scale" (the latter scales the whole
    weight vector, along which the rd value is exactly linear). Per-point
    failures are recorded in the row (NaN values, converged=False, error
    message) and the sweep continues. Parallelism across rows is capped by
    the GW_THREADS environment variable (default 1); per-row results are
    deterministic and assembled in order.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    config = config if config is not None else OuterConfig()
    threads = max(1, int(os.environ.get("GW_THREADS", "1")))

    def run(value):
        try:
            res = _sweep_point(axis, value, pmf, dist, weights, targets, config)
            return value, res, None
        except Exception as exc:  # per-row failure, sweep continues
            return value, None, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, grid))
    else:
        results = [run(v) for v in grid]
    rows = []
    for value, res, err in results:
        if res is None:
            rows.append({
                "axis_value": value, "rd_nats": float("nan"),
                "R0_nats": float("nan"), "R1_nats": float("nan"),
                "R2_nats": float("nan"), "D1": float("nan"),
                "D2": float("nan"), "beta1": float("nan"),
                "beta2": float("nan"), "outer_iters": 0,
                "converged": False, "error": err,
            })
        else:
            r0, r1, r2 = res.rate_triple
            rows.append({
                "axis_value": value, "rd_nats": res.rd_value,
                "R0_nats": r0, "R1_nats": r1, "R2_nats": r2,
                "D1": res.achieved[0], "D2": res.achieved[1],
                "beta1": res.multipliers.b1, "beta2": res.multipliers.b2,
                "outer_iters": res.outer_iterations,
                "converged": res.converged, "error": "",
            })
    return rows
