"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own update formulas:
information quantities are recomputed by direct summation over the dense
joint, and the Lagrangian minimum is recomputed from the prior-side
variational form evaluated in plain linear-space numpy.
"""

import numpy as np
import pytest
from scipy.optimize import minimize

from graywyner.model import (
    CodingDistribution,
    JointPmf,
    Multipliers,
    Weights,
    hamming_distortion,
)


def dense_joint(pmf, coding):
    """Full joint p(x1, x2, u, xh1, xh2) as a dense array."""
    return pmf.probs[:, :, None, None, None] * coding.values


def mutual_information(joint, axes_a, axes_b):
    """I(A;B) by direct summation, 0 log 0 = 0."""
    all_axes = tuple(range(joint.ndim))
    pa = joint.sum(axis=tuple(a for a in all_axes if a not in axes_a))
    pb = joint.sum(axis=tuple(a for a in all_axes if a not in axes_b))
    pab = joint.sum(
        axis=tuple(a for a in all_axes if a not in axes_a + axes_b)
    )
    total = 0.0
    for idx in np.ndindex(pab.shape):
        p = pab[idx]
        if p <= 0:
            continue
        ia = idx[: len(axes_a)]
        ib = idx[len(axes_a):]
        total += p * np.log(p / (pa[ia] * pb[ib]))
    return total


def rate_triple_bruteforce(pmf, coding):
    """(I(X;U), I(X;Xh1|U), I(X;Xh2|U)) by dense enumeration."""
    joint = dense_joint(pmf, coding)
    # I(X;U)
    j_xu = joint.sum(axis=(3, 4))
    i0 = mutual_information(j_xu[:, :, :, None], (0, 1), (2,))
    # I(X;Xhi|U) = sum_u p(u) I(X;Xhi | U=u)
    i1 = i2 = 0.0
    for u in range(joint.shape[2]):
        j_u1 = joint[:, :, u, :, :].sum(axis=3)
        j_u2 = joint[:, :, u, :, :].sum(axis=2)
        pu = j_u1.sum()
        if pu <= 0:
            continue
        i1 += pu * mutual_information(j_u1 / pu, (0, 1), (2,))
        i2 += pu * mutual_information(j_u2 / pu, (0, 1), (2,))
    return i0, i1, i2


def expected_distortions_bruteforce(pmf, coding, dist):
    joint = dense_joint(pmf, coding)
    e1 = e2 = 0.0
    for x1, x2, u, h1, h2 in np.ndindex(joint.shape):
        p = joint[x1, x2, u, h1, h2]
        e1 += p * dist.d1[x1, h1]
        e2 += p * dist.d2[x2, h2]
    return e1, e2


def lagrangian_bruteforce(pmf, coding, dist, weights, multipliers):
    i0, i1, i2 = rate_triple_bruteforce(pmf, coding)
    e1, e2 = expected_distortions_bruteforce(pmf, coding, dist)
    return (weights.a0 * i0 + weights.a1 * i1 + weights.a2 * i2
            + multipliers.b1 * e1 + multipliers.b2 * e2)


def _dual_objective_given_prior(q_u, q1, q2, pmf, dist, weights, multipliers):
    """min_p L^{P,Q}(p, q) evaluated directly in linear space.

    -a0 * sum_x p(x) log sum_u q(u) * s1(x1,u)^(a1/a0) * s2(x2,u)^(a2/a0)
    with s_i(x_i, u) = sum_xh q_i(xh|u) exp(-b_i d_i(x_i, xh) / a_i).
    """
    a0, a1, a2 = weights.a0, weights.a1, weights.a2
    e1 = np.exp(-multipliers.b1 * dist.d1 / a1)  # (x1, xh1)
    e2 = np.exp(-multipliers.b2 * dist.d2 / a2)  # (x2, xh2)
    s1 = e1 @ q1.T  # q1 is (u, xh1) -> s1 (x1, u)
    s2 = e2 @ q2.T  # (x2, u)
    inner = np.einsum(
        "u,au,bu->ab", q_u, s1 ** (a1 / a0), s2 ** (a2 / a0)
    )
    inner = np.maximum(inner, 1e-300)
    return -a0 * float(np.sum(pmf.probs * np.log(inner)))


def oracle_lagrangian_min(pmf, dist, weights, multipliers, coarse=13):
    """Independent grid + refinement oracle for min_p,q L^{P,Q} on
    2x2 sources with |U| = |Xh1| = |Xh2| = 2.

    The prior is parameterized by 5 probabilities (q(u=0), q(xh1=0|u) for
    both u, q(xh2=0|u) for both u); a coarse grid scan is refined by
    Nelder-Mead from the best grid point.
    """
    assert pmf.n1 == 2 and pmf.n2 == 2

    def value(params):
        t0, p10, p11, p20, p21 = np.clip(params, 1e-9, 1 - 1e-9)
        q_u = np.array([t0, 1 - t0])
        q1 = np.array([[p10, 1 - p10], [p11, 1 - p11]])
        q2 = np.array([[p20, 1 - p20], [p21, 1 - p21]])
        return _dual_objective_given_prior(
            q_u, q1, q2, pmf, dist, weights, multipliers
        )

    # vectorized coarse scan: s_i(x_i, u) factorizes per (u, grid prob)
    a0, a1, a2 = weights.a0, weights.a1, weights.a2
    e1 = np.exp(-multipliers.b1 * dist.d1 / a1)
    e2 = np.exp(-multipliers.b2 * dist.d2 / a2)
    grid = np.linspace(0.02, 0.98, coarse)
    t_grid = np.linspace(0.1, 0.5, 5)  # q(u=0) <= 1/2 wlog by symmetry
    # s1g[g, x1] = sum_xh q1(xh) e1(x1, xh) at grid prob g, same for s2
    s1g = np.outer(grid, e1[:, 0]) + np.outer(1 - grid, e1[:, 1])
    s2g = np.outer(grid, e2[:, 0]) + np.outer(1 - grid, e2[:, 1])
    r1g = s1g ** (a1 / a0)  # (g, x1)
    r2g = s2g ** (a2 / a0)  # (g, x2)
    # per-u products over (grid_1, grid_2, x1, x2)
    tu = np.einsum("ia,jb->ijab", r1g, r2g)
    best_v, best_p = np.inf, None
    for t0 in t_grid:
        # inner[i,j,k,l,a,b] = t0*tu[i,k,a,b] + (1-t0)*tu[j,l,a,b]
        inner = (t0 * tu[:, None, :, None] + (1 - t0) * tu[None, :, None, :])
        obj = -a0 * np.einsum(
            "ab,ijklab->ijkl", pmf.probs, np.log(np.maximum(inner, 1e-300))
        )
        idx = np.unravel_index(np.argmin(obj), obj.shape)
        if obj[idx] < best_v:
            best_v = float(obj[idx])
            i, j, k, l = idx
            best_p = (t0, grid[i], grid[j], grid[k], grid[l])
    res = minimize(value, best_p, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
    return min(best_v, float(res.fun))


@pytest.fixture
def dsbs_pmf():
    return JointPmf(np.array([[0.4, 0.1], [0.1, 0.4]]))


@pytest.fixture
def hamming2():
    return hamming_distortion(2)


def random_small_instance(rng, n1=2, n2=2, k=2, m1=2, m2=2):
    """Random (pmf, coding, prior arrays) for oracle comparisons."""
    probs = rng.random((n1, n2))
    probs /= probs.sum()
    dense = rng.random((n1, n2, k, m1, m2))
    dense /= dense.sum(axis=(2, 3, 4), keepdims=True)
    return JointPmf(probs), CodingDistribution.from_dense(dense)


def unit_weights():
    return Weights(1.0, 1.0, 1.0)


def multipliers(b1, b2):
    return Multipliers(b1, b2)
