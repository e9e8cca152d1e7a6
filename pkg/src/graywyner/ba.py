"""Expanded Blahut-Arimoto double minimization of the penalized objective.

The inner solver alternates, in log-space:

    f-step   auxiliary exponentiated-distortion functions from the prior q
    p-step   normalized coding conditionals proportional to the f's
    q-step   prior reset to the true marginals of the induced joint

which monotonically decreases the Lagrangian

    L = a0*I(X;U) + a1*I(X;Xhat1|U) + a2*I(X;Xhat2|U) + b1*E d1 + b2*E d2.

Optimality certificates (the upsilon/mu sums, all <= 1 at a global optimum
and all = 1 on the support) are computed from the same auxiliary functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, rel_entr

from .model import (
    CodingDistribution,
    DegenerateInputError,
    JointPmf,
    Multipliers,
    ReproductionPrior,
    Weights,
    expected_distortions,
    rate_triple,
    safe_log,
)

DESCENT_SLACK = 1e-9


class FeasibilityError(ValueError):
    """An auxiliary triple violates the mu-sum feasibility inequalities."""


def _require_positive_weights(weights):
    if not weights.all_positive():
        raise ValueError(
            "alternating minimization requires strictly positive weights; "
            "zero-weight layers are served by the closed-form special cases "
            "(gaussian.special_case_rd) or by dropping the layer upstream"
        )


@dataclass
class FTriple:
    """Auxiliary functions of one f-step, held in log-space.

    log_s1[x1, u] = log sum_xhat1 f1(x1, x2, u, xhat1)   (independent of x2)
    log_s2[x2, u] = log sum_xhat2 f2(...)                (independent of x1)
    log_f0[x1, x2, u] = log q(u) + (a1/a0) log_s1 + (a2/a0) log_s2

    The q-parts and the distortion exponents log_e1[x1, xhat1] =
    -(b1/a1) d1(x1, xhat1) (resp. log_e2) are kept separately so the
    certificate sums can be evaluated without re-deriving them; f1 itself is
    log_q1[u, xhat1] + log_e1[x1, xhat1], broadcast over x2.
    """

    log_f0: np.ndarray
    log_s1: np.ndarray
    log_s2: np.ndarray
    log_e1: np.ndarray
    log_e2: np.ndarray
    log_q_u: np.ndarray
    log_q1: np.ndarray
    log_q2: np.ndarray
    weights: Weights
    multipliers: Multipliers

    @property
    def shape(self):
        n1, n2, k = self.log_f0.shape
        return (n1, n2, k, self.log_q1.shape[1], self.log_q2.shape[1])

    @property
    def log_f1(self):
        """log f1 broadcast to the full (x1, x2, u, xhat1) index set."""
        n1, n2, k, m1, _ = self.shape
        arr = self.log_q1[None, :, :] + self.log_e1[:, None, :]
        return np.broadcast_to(arr[:, None, :, :], (n1, n2, k, m1))

    @property
    def log_f2(self):
        n1, n2, k, _, m2 = self.shape
        arr = self.log_q2[None, :, :] + self.log_e2[:, None, :]
        return np.broadcast_to(arr[None, :, :, :], (n1, n2, k, m2))


@dataclass
class BaConfig:
    """Inner-loop configuration.

    init is either an integer seed for the default perturbed-uniform prior or
    an explicit ReproductionPrior. u_size defaults to m1*m2 when None.
    """

    epsilon: float = 1e-6
    max_iterations: int = 500
    u_size: int | None = None
    init: int | ReproductionPrior = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.u_size is not None and self.u_size < 1:
            raise ValueError("u_size must be >= 1")

    @classmethod
    def from_json(cls, data):
        import json

        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        return cls(
            epsilon=data.get("epsilon", 1e-4),
            max_iterations=data.get("max_iterations", 500),
            u_size=data.get("u_size"),
            init=data.get("seed", 0),
        )


@dataclass
class BaState:
    """Snapshot of an alternating-minimization run."""

    coding: CodingDistribution
    prior: ReproductionPrior
    lagrangian_value: float
    iteration: int
    trace: list = field(default_factory=list)
    converged: bool = True


@dataclass
class KtCertificate:
    max_v0: float
    max_v1: float
    max_v2: float
    tol: float

    @property
    def passed(self):
        bound = 1.0 + self.tol
        return (
            self.max_v0 <= bound and self.max_v1 <= bound and self.max_v2 <= bound
        )


def update_f(prior, dist, weights, multipliers):
    """f-step: exponentiated-distortion auxiliaries from the current prior."""
    _require_positive_weights(weights)
    a0, a1, a2 = weights.as_tuple()
    b1, b2 = multipliers.as_tuple()
    log_e1 = -(b1 / a1) * dist.d1  # (n1, m1)
    log_e2 = -(b2 / a2) * dist.d2  # (n2, m2)
    log_q_u = safe_log(prior.q_u)
    log_q1 = safe_log(prior.q1)
    log_q2 = safe_log(prior.q2)
    # exact zeros in q must behave as true zeros, not floored values
    log_q_u[prior.q_u == 0] = -np.inf
    log_q1[prior.q1 == 0] = -np.inf
    log_q2[prior.q2 == 0] = -np.inf
    log_s1 = logsumexp(log_q1[None, :, :] + log_e1[:, None, :], axis=2)  # (n1,k)
    log_s2 = logsumexp(log_q2[None, :, :] + log_e2[:, None, :], axis=2)  # (n2,k)
    log_f0 = (
        log_q_u[None, None, :]
        + (a1 / a0) * log_s1[:, None, :]
        + (a2 / a0) * log_s2[None, :, :]
    )
    return FTriple(
        log_f0=log_f0,
        log_s1=log_s1,
        log_s2=log_s2,
        log_e1=log_e1,
        log_e2=log_e2,
        log_q_u=log_q_u,
        log_q1=log_q1,
        log_q2=log_q2,
        weights=weights,
        multipliers=multipliers,
    )


def update_p(pmf, f):
    """p-step: coding conditionals proportional to the f's, normalized."""
    log_norm0 = logsumexp(f.log_f0, axis=2)  # (n1, n2)
    if np.any(np.isneginf(log_norm0)):
        x1, x2 = np.argwhere(np.isneginf(log_norm0))[0]
        raise DegenerateInputError(
            f"all-zero f0 slice at (x1,x2)=({x1},{x2}); the prior has no "
            "usable support (underflow or invalid multiplier/weight regime)"
        )
    p_u = np.exp(f.log_f0 - log_norm0[:, :, None])
    # per-(x1,u) and per-(x2,u) conditionals; x2/x1 axes enter by broadcast
    log_g1 = f.log_q1[None, :, :] + f.log_e1[:, None, :]  # (n1, k, m1)
    log_g2 = f.log_q2[None, :, :] + f.log_e2[:, None, :]  # (n2, k, m2)
    p1 = np.exp(log_g1 - f.log_s1[:, :, None])
    p2 = np.exp(log_g2 - f.log_s2[:, :, None])
    n1, n2, k, m1, m2 = f.shape
    # rows with q(u) = 0 have p(u|x) = 0; their xhat conditionals are inert
    # but must stay normalized for validation
    dead1 = ~np.isfinite(f.log_s1)
    if np.any(dead1):
        p1[dead1, :] = 1.0 / m1
    dead2 = ~np.isfinite(f.log_s2)
    if np.any(dead2):
        p2[dead2, :] = 1.0 / m2
    return CodingDistribution(
        p_u,
        p1[:, None, :, :],
        p2[None, :, :, :],
        shape=(n1, n2, k, m1, m2),
    )


def update_q(pmf, coding):
    """q-step: prior reset to the true marginals of the induced joint."""
    P = pmf.probs
    q_u = np.einsum("ij,iju->u", P, coding.p_u)
    j1 = np.einsum("ij,iju,ijua->ua", P, coding.p_u, coding.p1)
    j2 = np.einsum("ij,iju,ijub->ub", P, coding.p_u, coding.p2)
    m1 = coding.shape[3]
    m2 = coding.shape[4]
    with np.errstate(invalid="ignore", divide="ignore"):
        q1 = j1 / q_u[:, None]
        q2 = j2 / q_u[:, None]
    q1 = np.where(q_u[:, None] > 0, q1, 1.0 / m1)
    q2 = np.where(q_u[:, None] > 0, q2, 1.0 / m2)
    return ReproductionPrior(q_u, q1, q2)


def lagrangian_value_from_f(pmf, f, weights):
    """Closed-form value -a0 * sum_x p(x) log sum_u f0(x, u)."""
    log_norm0 = logsumexp(f.log_f0, axis=2)
    support = pmf.probs > 0
    if np.any(np.isneginf(log_norm0) & support):
        x1, x2 = np.argwhere(np.isneginf(log_norm0) & support)[0]
        raise DegenerateInputError(
            f"sum_u f0 = 0 at support point (x1,x2)=({x1},{x2})"
        )
    terms = np.where(support, pmf.probs * np.where(support, log_norm0, 0.0), 0.0)
    return float(-weights.a0 * terms.sum())


def lagrangian_p(pmf, coding, dist, weights, multipliers):
    """Penalized objective of a coding distribution (no free prior)."""
    _require_positive_weights(weights)
    i_u, i_1, i_2 = rate_triple(pmf, coding)
    ed1, ed2 = expected_distortions(pmf, coding, dist)
    a0, a1, a2 = weights.as_tuple()
    b1, b2 = multipliers.as_tuple()
    return a0 * i_u + a1 * i_1 + a2 * i_2 + b1 * ed1 + b2 * ed2


def lagrangian_pq(pmf, coding, prior, dist, weights, multipliers):
    """Penalized objective with a free prior q in place of the marginals.

    Exceeds lagrangian_p by the weighted KL divergences between the induced
    marginals and q, hence is minimized over q exactly at the marginals.
    """
    _require_positive_weights(weights)
    P = pmf.probs
    j_u = P[:, :, None] * coding.p_u  # p(x1,x2,u)
    # a0 * sum p(x,u) log( p(u|x) / q(u) )
    t0 = rel_entr(j_u, P[:, :, None] * prior.q_u[None, None, :]).sum()
    if np.isinf(t0):
        raise DegenerateInputError(
            "prior q(u) has zero mass where the coding distribution is positive"
        )
    tot = weights.a0 * t0
    for p_i, q_i, a_i in ((coding.p1, prior.q1, weights.a1),
                          (coding.p2, prior.q2, weights.a2)):
        j_i = j_u[..., None] * p_i  # p(x1,x2,u,xhat)
        ref = j_u[..., None] * q_i[None, None, :, :]
        t = rel_entr(j_i, ref).sum()
        if np.isinf(t):
            raise DegenerateInputError(
                "prior conditional has zero mass where the coding "
                "distribution is positive"
            )
        tot += a_i * t
    ed1, ed2 = expected_distortions(pmf, coding, dist)
    return float(tot + multipliers.b1 * ed1 + multipliers.b2 * ed2)


def default_prior(pmf, dist, u_size, seed=0, rel_perturbation=0.01):
    """Seeded default initialization: uniform q(u) times per-u perturbed
    reproduction marginals.

    The base reproduction law is the matching source marginal when the
    reproduction alphabet equals the source alphabet, else uniform; a
    deterministic seeded perturbation of 1% relative magnitude breaks the
    symmetry that can stall alternation on symmetric sources.
    """
    rng = np.random.default_rng(seed)
    k = u_size
    q_u = np.full(k, 1.0 / k)
    out = []
    for m, base in ((dist.m1, pmf.marginal1() if dist.m1 == pmf.n1 else None),
                    (dist.m2, pmf.marginal2() if dist.m2 == pmf.n2 else None)):
        b = np.full(m, 1.0 / m) if base is None else np.asarray(base, float)
        b = np.maximum(b, 1e-12)
        rows = b[None, :] * (1.0 + rel_perturbation * rng.uniform(-1, 1, (k, m)))
        rows /= rows.sum(axis=1, keepdims=True)
        out.append(rows)
    return ReproductionPrior(q_u, out[0], out[1])


def minimize_lagrangian(pmf, dist, weights, multipliers, config):
    """Alternate f/p/q updates until |delta L| <= epsilon or max_iterations.

    Non-convergence is flagged on the returned state, not raised; the full
    per-iteration trace of L values is attached either way.
    """
    _require_positive_weights(weights)
    if isinstance(config.init, ReproductionPrior):
        prior = config.init
    else:
        u_size = config.u_size if config.u_size is not None else dist.m1 * dist.m2
        prior = default_prior(pmf, dist, u_size, seed=config.init)
    trace = []
    coding = None
    prev = None
    converged = False
    for it in range(1, config.max_iterations + 1):
        f = update_f(prior, dist, weights, multipliers)
        value = lagrangian_value_from_f(pmf, f, weights)
        trace.append(value)
        coding = update_p(pmf, f)
        prior = update_q(pmf, coding)
        if prev is not None and abs(prev - value) <= config.epsilon:
            converged = True
            break
        prev = value
    return BaState(
        coding=coding,
        prior=prior,
        lagrangian_value=trace[-1],
        iteration=len(trace),
        trace=trace,
        converged=converged,
    )


def _log_mu_families(pmf, f):
    """Log-space mu/upsilon sums shared by mu_sums and kt_check.

    Returns (log_v0 over u, log_v1 over (u, xhat1), log_v2 over (u, xhat2))
    where

        v0(u)        = sum_x p(x) s1^(a1/a0) s2^(a2/a0) / ftilde0(x)
        v1(u, xhat1) = sum_x p(x) s1^(a1/a0 - 1) s2^(a2/a0)
                       e^(-(b1/a1) d1) / ftilde0(x)
        v2(u, xhat2)   symmetric

    with s_i = sum_xhat_i f_i and ftilde0 = sum_u f0. All equal 1 at a global
    optimum (on the support of q).
    """
    a0, a1, a2 = f.weights.as_tuple()
    log_p = safe_log(pmf.probs)
    log_p[pmf.probs == 0] = -np.inf
    log_ftilde0 = logsumexp(f.log_f0, axis=2)  # (n1, n2)
    # log mu0 without the q(u) factor: (n1, n2, k)
    base = (
        log_p[:, :, None]
        + (a1 / a0) * f.log_s1[:, None, :]
        + (a2 / a0) * f.log_s2[None, :, :]
        - log_ftilde0[:, :, None]
    )
    log_v0 = logsumexp(base, axis=(0, 1))  # (k,)
    # layer 1: subtract log_s1, add distortion exponent, sum over x
    t1 = base[:, :, :, None] + (f.log_e1[:, None, :] - f.log_s1[:, :, None])[
        :, None, :, :
    ]
    log_v1 = logsumexp(t1, axis=(0, 1))  # (k, m1)
    t2 = base[:, :, :, None] + (f.log_e2[:, None, :] - f.log_s2[:, :, None])[
        None, :, :, :
    ]
    log_v2 = logsumexp(t2, axis=(0, 1))  # (k, m2)
    return log_v0, log_v1, log_v2


def mu_sums(pmf, f):
    """The three mu-sum families: per-u, per-(u, xhat1), per-(u, xhat2).

    At a global optimum every entry (on the support of the generating prior)
    equals 1; the q(u)-weighted average of the per-u family is exactly 1 at
    every iterate.
    """
    log_v0, log_v1, log_v2 = _log_mu_families(pmf, f)
    return np.exp(log_v0), np.exp(log_v1), np.exp(log_v2)


def kt_check(pmf, prior, dist, weights, multipliers, tol=1e-4):
    """Optimality certificate from a (converged) prior.

    Evaluates the upsilon families for every u with q(u) > 0 plus the v0
    values of unused u; passes iff all maxima are <= 1 + tol.
    """
    f = update_f(prior, dist, weights, multipliers)
    v0, v1, v2 = mu_sums(pmf, f)
    used = prior.q_u > 0
    # v0 is checked everywhere (unused u included); v1/v2 only where q(u) > 0
    max_v0 = float(v0.max())
    max_v1 = float(v1[used].max()) if used.any() else float(v1.max())
    max_v2 = float(v2[used].max()) if used.any() else float(v2.max())
    return KtCertificate(max_v0=max_v0, max_v1=max_v1, max_v2=max_v2, tol=tol)


def lower_bound_value(pmf, f, weights, feas_tol=1e-9):
    """Certified lower bound -a0 sum_x p(x) log sum_u f0(x, u).

    Requires the feasibility inequalities sum_x mu1 <= sum_x mu0 <= 1 and
    sum_x mu2 <= sum_x mu0 <= 1 (per u on the support of the generating
    prior); when they hold the returned value is <= the penalized objective
    of every valid coding distribution.
    """
    v0, v1, v2 = mu_sums(pmf, f)
    used = np.isfinite(f.log_q_u)
    if np.any(v0[used] > 1.0 + feas_tol):
        u = int(np.argwhere(used)[np.argmax(v0[used])][0])
        raise FeasibilityError(
            f"sum mu0 = {v0[u]!r} > 1 at u={u}; the auxiliary triple is "
            "outside the feasible class"
        )
    for name, v in (("mu1", v1), ("mu2", v2)):
        gap = v[used] - v0[used][:, None]
        if np.any(gap > feas_tol):
            raise FeasibilityError(
                f"sum {name} exceeds sum mu0 by {float(gap.max())!r}"
            )
    return lagrangian_value_from_f(pmf, f, weights)
