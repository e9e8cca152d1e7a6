"""Exact weighted RD solutions for bivariate unit-variance Gaussian sources
under squared error.

The solution is parameterized by a scalar auxiliary variable U of variance
sigma0sq loading into the reproductions as xhat_i = m_i*U + V_i. The rd value
decomposes as a0*R0 + a1*R1 + a2*R2 with

    R0 = 1/2 log((1 - rho^2)/det M),  M = Cov((X1,X2) | U),
    R_i = 1/2 log((1 - m_i^2 sigma0sq)/D_i),

and the distortion plane splits into regions determining which closed-form
parameter set applies. Two families of weight vectors leave the scalar-U
parameterization entirely (flagged ``representable=False``): weights with
a0 < min(a1, a2) when (1-D1)(1-D2) > rho^2 (the optimal U is then
two-dimensional and the value is a0/2 * log((1-rho^2)/(D1*D2))), and
slack-constraint corners of the successive-refinement regimes (one private
rate is 0 at an achieved distortion strictly below its target). For those the
value and rates are still exact; only the per-parameter constraint
certificate does not apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Weights

TOL = 1e-9


class RegimeError(ValueError):
    """Inputs outside the regime a formula is valid for."""


class ClassificationError(RegimeError):
    """No region's feasibility predicates hold; carries all residuals."""

    def __init__(self, message, residuals):
        super().__init__(f"{message}; residuals: {residuals}")
        self.residuals = residuals


@dataclass(frozen=True)
class GaussianSpec:
    """Unit-variance bivariate Gaussian source with correlation rho."""

    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise RegimeError("correlation out of range (0, 1)")


@dataclass
class CertificateBundle:
    """Closed-form optimality certificate quantities.

    H is the inverse of the conditional covariance of (X1, X2) given U;
    the omega/eta/gamma values and the optimal multipliers (b1, b2) satisfy
    complementary slackness gamma_i*(b_i/a_i - omega_i) = 0, reconstruct the
    distortions D_i = eta_i / (2*(gamma_i + (b_i/a_i)*eta_i)), and combine
    into the rd identity

        a0/2 log(1-rho^2) + (a0-a1-a2)/2 log|H|
            + a1/2 log|G1| + a2/2 log|G2|  =  rd_value

    with |G_i| = 2*(gamma_i + eta_i*b_i/a_i).
    """

    H: np.ndarray
    b: float
    omega1: float
    omega2: float
    eta1: float
    eta2: float
    gamma1: float
    gamma2: float
    b1: float
    b2: float
    K0: float
    sigma_v1_sq: float
    sigma_v2_sq: float
    det_H: float
    det_G1: float
    det_G2: float


@dataclass
class GaussianSolution:
    m1: float
    m2: float
    sigma0sq: float
    region: str
    rd_value: float
    rate_triple: tuple
    certificate: CertificateBundle | None
    weights: Weights
    targets: tuple
    rho: float
    representable: bool = True
    notes: tuple = ()


def special_case_rd(weights, targets, spec=None):
    """Closed forms for the trivial weight/distortion regimes, else None.

    Cases, in order: a0 = 0 (common layer free) -> 0; a2 = 0 with a1 > a0
    or D2 >= 1 -> a0/2 log(1/D1); the symmetric case -> a0/2 log(1/D2);
    a1 + a2 <= a0 (common layer never pays) -> a1/2 log(1/D1) +
    a2/2 log(1/D2). Each log term is clamped at 0 for targets >= 1.
    """
    a0, a1, a2 = weights.as_tuple()
    d1, d2 = float(targets[0]), float(targets[1])
    if d1 <= 0 or d2 <= 0:
        raise RegimeError("target distortions must be positive")
    r1 = max(0.0, 0.5 * math.log(1.0 / d1))
    r2 = max(0.0, 0.5 * math.log(1.0 / d2))
    if a0 == 0:
        return 0.0
    if (a2 == 0 and a1 > a0 > 0) or d2 >= 1.0:
        return a0 * r1
    if (a1 == 0 and a2 > a0 > 0) or d1 >= 1.0:
        return a0 * r2
    if a1 + a2 <= a0:
        return a1 * r1 + a2 * r2
    return None


def f_alpha(m1, m2, sigma0sq, rho, weights):
    """The two binary cubic stationarity functions (f_a1, f_a2)."""
    a0, a1, a2 = weights.as_tuple()
    if a0 <= 0:
        raise RegimeError("f_alpha requires a0 > 0")
    s0 = sigma0sq
    fa1 = (a1 / a0) * (m2 - m1 * rho) * (rho - m1 * m2 * s0) + (
        a1 / a0 - 1.0
    ) * (m1 - m2 * rho) * (1.0 - m1 * m1 * s0)
    fa2 = (a2 / a0) * (m1 - m2 * rho) * (rho - m1 * m2 * s0) + (
        a2 / a0 - 1.0
    ) * (m2 - m1 * rho) * (1.0 - m2 * m2 * s0)
    return (fa1, fa2)


def nu_values(weights, rho):
    """Closed-form threshold distortions (nu1, nu2) for the interior region
    (both cubics vanish at sigma0sq = 1).

    Requires a1 != a2, a0 >= max(a1, a2) and a1 + a2 > a0; the weight
    boundaries a_i = a0 are served by their analytic limits.
    """
    a0, a1, a2 = weights.as_tuple()
    if a1 == a2:
        raise RegimeError(
            "nu_values requires a1 != a2; use the equal-weights closed form"
        )
    if not (a0 >= max(a1, a2) and a1 + a2 > a0):
        raise RegimeError("nu_values requires a0 >= max(a1, a2), a1 + a2 > a0")
    disc = math.sqrt((a1 - a2) ** 2 * rho**2 + 4.0 * (a0 - a1) * (a0 - a2))
    den = (a0 - a2) * a2 - (a0 - a1) * a1
    if a0 - a1 < 1e-12:
        # limit a1 -> a0: the region collapses onto the D1 -> 0 edge
        nu1 = 0.0
    else:
        r21 = ((a2 - a1) * rho + disc) / (2.0 * (a0 - a1))
        nu1 = (a0 - a1) * a1 / den * (r21**2 - 1.0)
    if a0 - a2 < 1e-12:
        nu2 = 0.0
    else:
        r12 = ((a1 - a2) * rho + disc) / (2.0 * (a0 - a2))
        nu2 = (a0 - a2) * a2 / (-den) * (r12**2 - 1.0)
    return (nu1, nu2)


@dataclass(frozen=True)
class RootResult:
    m: float
    boundary: bool
    case: str


def find_root_m(which, fixed, sigma0sq, rho, weights,
                f_tol=1e-12, x_tol=1e-14):
    """Unique root of one stationarity cubic with the other loading fixed.

    which = 2 solves f_a2(fixed, m2) = 0 in m2; which = 1 solves
    f_a1(m1, fixed) = 0 in m1. The root lies in the open bracket
    (fixed*rho, min(fixed/rho, rho/(fixed*sigma0sq))); endpoints are shrunk
    inward by a 1e-12 relative margin and the root located by bisection.
    Degenerate cases: a_which = a0 factors the cubic into the two bracket
    endpoints (the smaller is returned with boundary=True); coincident
    endpoints (sigma0sq = rho^2/fixed^2) reduce the cubic to a deflated
    quadratic which is bisected instead.
    """
    a0, a1, a2 = weights.as_tuple()
    if a0 <= 0:
        raise RegimeError("root solve requires a0 > 0")
    a_w = a2 if which == 2 else a1
    c = float(fixed)
    s0 = float(sigma0sq)
    if c <= 0 or s0 <= 0:
        raise RegimeError("fixed loading and sigma0sq must be positive")
    lo = c * rho
    end_a = c / rho
    end_b = rho / (c * s0)
    hi = min(end_a, end_b)
    case = (
        "coincident-endpoints" if abs(end_a - end_b) <= 1e-9 * max(end_a, end_b)
        else ("fixed/rho-limited" if end_a < end_b else "rho/(fixed*sigma0sq)-limited")
    )
    if hi <= lo:
        raise RegimeError(
            f"empty root bracket ({lo!r}, {hi!r}) [{case}]"
        )

    def g(m):
        pair = f_alpha(c, m, s0, rho, weights) if which == 2 else f_alpha(
            m, c, s0, rho, weights
        )
        return pair[1] if which == 2 else pair[0]

    if abs(a_w - a0) <= 1e-12 * max(a_w, a0):
        # cubic factors as (a_w/a0)(m1 - m2 rho)(rho - m1 m2 s0): both roots
        # are the bracket endpoints; the binding one is the smaller
        return RootResult(m=hi, boundary=True, case=f"degenerate-factorization [{case}]")

    margin = 1e-12 * (hi - lo)
    lo_in, hi_in = lo + margin, hi - margin

    if case == "coincident-endpoints":
        # deflate: f = (c - m rho) * h(m) up to index symmetry; bisect h
        aw0 = a_w / a0

        def h(m):
            return aw0 * (rho / c) * (c - m * rho) + (aw0 - 1.0) * (
                m - c * rho
            ) * (c + m * rho) / c**2

        func = h
    else:
        func = g

    fl, fh = func(lo_in), func(hi_in)
    if fl == 0.0:
        return RootResult(m=lo_in, boundary=False, case=case)
    if fh == 0.0:
        return RootResult(m=hi_in, boundary=False, case=case)
    if fl * fh > 0:
        # no interior sign change: near-degenerate weights put the root at
        # the boundary endpoint
        if min(abs(fl), abs(fh)) <= f_tol:
            m = lo_in if abs(fl) < abs(fh) else hi_in
            return RootResult(m=m, boundary=True, case=case)
        raise RegimeError(
            f"no sign change in bracket ({lo!r}, {hi!r}) [{case}]: "
            f"f({lo_in!r})={fl!r}, f({hi_in!r})={fh!r}"
        )
    a, b = lo_in, hi_in
    fa = fl
    while b - a > x_tol:
        mid = 0.5 * (a + b)
        fm = func(mid)
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
    m = 0.5 * (a + b)
    # Newton polish: downstream certificate quantities multiply the cubic
    # residual by 1/det_M^2, which is large at small distortions, so the
    # residual must be driven well below f_tol
    for _ in range(3):
        fm = func(m)
        if fm == 0.0:
            break
        h = 1e-7 * max(abs(m), 1.0)
        deriv = (func(m + h) - func(m - h)) / (2.0 * h)
        if deriv == 0.0:
            break
        step = fm / deriv
        if not (lo_in <= m - step <= hi_in):
            break
        m -= step
    return RootResult(m=m, boundary=False, case=case)


def _det_m(m1, m2, s0, rho):
    return (1.0 - m1 * m1 * s0) * (1.0 - m2 * m2 * s0) - (rho - m1 * m2 * s0) ** 2


def _constraints_ok(m1, m2, s0, rho):
    """Relaxed bands of the scalar-U feasibility constraints."""
    if rho < m1 * m2 * s0 - TOL:
        return False
    if m1 > 0 and m2 > 0 and rho >= min(m1 / m2, m2 / m1) + TOL:
        return False
    return True


def classify_region(weights, targets, spec):
    """Region label and parameter set (m1, m2, sigma0sq) for nontrivial
    weights (all positive, a1 + a2 > a0) and targets in (0, 1)^2.

    Returns (region, m1, m2, sigma0sq, representable). Candidate regions are
    tried in the deterministic tie-break order DD3, DD1, DD2, DD4 for
    weights with a0 >= max(a1, a2); weight vectors with exactly one private
    weight above the common weight reduce to successive refinement
    (SUCC_REF_12 / SUCC_REF_21), and both above to the common-information
    form (XIAO).
    """
    a0, a1, a2 = weights.as_tuple()
    rho = spec.rho
    d1, d2 = float(targets[0]), float(targets[1])
    if not (0 < d1 < 1 and 0 < d2 < 1):
        raise RegimeError("classification requires targets in (0, 1)")
    if not weights.all_positive() or a1 + a2 <= a0:
        raise RegimeError("weights are served by special_case_rd")

    if a1 > a0 and a2 > a0:
        return _classify_xiao(weights, d1, d2, rho)
    if a2 > a0 >= a1:
        return _classify_succ_ref(weights, d1, d2, rho, swapped=False)
    if a1 > a0 >= a2:
        return _classify_succ_ref(weights, d1, d2, rho, swapped=True)
    return _classify_proper(weights, d1, d2, rho)


def _classify_xiao(weights, d1, d2, rho):
    m1 = math.sqrt(1.0 - d1)
    m2 = math.sqrt(1.0 - d2)
    prod = (1.0 - d1) * (1.0 - d2)
    if prod <= rho**2 + TOL:
        rep = _constraints_ok(m1, m2, 1.0, rho)
        return ("XIAO", m1, m2, 1.0, rep)
    # the positive part clamps to 0; a scalar U cannot realize det = D1*D2,
    # report the closest feasible scaling (rho = m1*m2*sigma0sq boundary)
    s0 = rho / math.sqrt(prod)
    return ("XIAO", m1, m2, s0, False)


def _classify_succ_ref(weights, d1, d2, rho, swapped):
    """SUCC_REF_12: a2 > a0 >= a1, the common layer carries xhat2 exactly at
    D2 (m2 = 1, sigma0sq = 1 - D2) and only the first private layer is free.
    swapped=True mirrors the roles."""
    a0, a1, a2 = weights.as_tuple()
    if swapped:
        d_active, d_free = d1, d2
        w_mirror = Weights(a0, a2, a1)
    else:
        d_active, d_free = d2, d1
        w_mirror = weights
    label = "SUCC_REF_21" if swapped else "SUCC_REF_12"
    s0 = 1.0 - d_active
    # root of the free-layer cubic with the active loading fixed at 1
    try:
        root = find_root_m(1, 1.0, s0, rho, w_mirror)
        ach_root = 1.0 - root.m**2 * s0
    except RegimeError:
        root = None
        ach_root = None
    if root is not None and d_free <= ach_root + TOL:
        mf = root.m
        rep = True
    elif d_free >= 1.0 - rho**2 * s0 - TOL:
        # free constraint inactive: the private layer is silent and the best
        # deterministic reproduction from U already beats the target
        mf = rho
        rep = False
    else:
        mf = math.sqrt((1.0 - d_free) / s0)
        rep = True
    if swapped:
        return (label, 1.0, mf, s0, rep)
    return (label, mf, 1.0, s0, rep)


def _corner_threshold(m_star, rho, a_ratio):
    """Active-distortion lower bound of the corner regions, as numerator and
    denominator (the denominator can vanish or go negative near the bracket
    bottom, so the comparison is made sign-aware by the caller)."""
    num = a_ratio * (m_star - rho) ** 2
    den = a_ratio * (m_star**2 - 2.0 * m_star * rho + 1.0) + m_star * rho - 1.0
    return num, den


def _above_threshold(d_active, m_star, rho, a_ratio, slack):
    """d_active > num/den with sign-aware cross multiplication; `slack`
    shifts the strict inequality (negative slack relaxes it)."""
    num, den = _corner_threshold(m_star, rho, a_ratio)
    if den > 0:
        return d_active * den > num + slack * max(1.0, abs(den))
    # num >= 0 always, so a nonpositive denominator makes the bound <= 0
    return True


def _try_corner(label, weights, d1, d2, rho, residuals, slack):
    """DD1/DD2 corner candidate: the active constraint fixes sigma0sq, the
    other loading is the partner cubic's root. Returns a classify tuple or
    None (recording residuals)."""
    a0, a1, a2 = weights.as_tuple()
    if label == "DD1":
        da, db, w_mirror, a_ratio = d1, d2, weights, a1 / a0
    else:
        da, db, w_mirror, a_ratio = d2, d1, Weights(a0, a2, a1), a2 / a0
    s0 = 1.0 - da
    try:
        root = find_root_m(2, 1.0, s0, rho, w_mirror)
    except RegimeError as exc:
        residuals[label] = {"root": str(exc)}
        return None
    mb = root.m
    ach = 1.0 - mb**2 * s0
    fa_self, _unused = f_alpha(1.0, mb, s0, rho, w_mirror)
    ok = (
        _above_threshold(da, mb, rho, a_ratio, slack)
        and db <= ach + TOL
        and fa_self >= -TOL
        and _constraints_ok(1.0, mb, s0, rho)
    )
    if ok:
        if label == "DD1":
            return ("DD1", 1.0, mb, s0, True)
        return ("DD2", mb, 1.0, s0, True)
    residuals[label] = {
        "above_threshold": _above_threshold(da, mb, rho, a_ratio, slack),
        "achieved_free": ach, "target_free": db, "f_partner": fa_self,
        "constraints": _constraints_ok(1.0, mb, s0, rho),
    }
    return None


def _classify_proper(weights, d1, d2, rho):
    a0, a1, a2 = weights.as_tuple()
    residuals = {}
    # DD3: both distortion constraints active at the common layer
    m1 = math.sqrt(1.0 - d1)
    m2 = math.sqrt(1.0 - d2)
    fa1, fa2 = f_alpha(m1, m2, 1.0, rho, weights)
    if fa1 >= -TOL and fa2 >= -TOL and _constraints_ok(m1, m2, 1.0, rho):
        return ("DD3", m1, m2, 1.0, True)
    residuals["DD3"] = {
        "f_a1": fa1, "f_a2": fa2,
        "constraints": _constraints_ok(m1, m2, 1.0, rho),
    }
    # DD1/DD2: one constraint active at the common layer, second loading a
    # cubic root; the strict threshold keeps degenerate-tie points (where
    # the threshold collapses onto d_active itself) out of the corners
    for label in ("DD1", "DD2"):
        hit = _try_corner(label, weights, d1, d2, rho, residuals, slack=TOL)
        if hit is not None:
            return hit
    # DD4: both constraints slack at the common layer (roots of both cubics)
    if abs(a1 - a2) <= 1e-12:
        label = "DD4_EQ"
        nu1 = a1 * (1.0 - rho) / (a1 + a2 - a0)
        nu2 = a2 * (1.0 - rho) / (a1 + a2 - a0)
    else:
        label = "DD4_NEQ"
        nu1, nu2 = nu_values(weights, rho)
    if nu1 < 1.0 - TOL and nu2 < 1.0 - TOL:
        if label == "DD4_EQ":
            den = a0 - a1 - a2
            m1c = math.sqrt(abs((a1 * rho + a1 - a0) / den))
            m2c = math.sqrt(abs((a2 * rho + a2 - a0) / den))
            fc1, fc2 = f_alpha(m1c, m2c, 1.0, rho, weights)
            if abs(fc1) > 1e-8 or abs(fc2) > 1e-8:
                raise RegimeError(
                    "equal-weights interior parameters do not satisfy the "
                    f"stationarity cubics: f=({fc1!r}, {fc2!r})"
                )
        else:
            m1c, m2c = math.sqrt(1.0 - nu1), math.sqrt(1.0 - nu2)
        if (
            d1 <= nu1 + TOL
            and d2 <= nu2 + TOL
            and _constraints_ok(m1c, m2c, 1.0, rho)
        ):
            return (label, m1c, m2c, 1.0, True)
        residuals[label] = {"nu1": nu1, "nu2": nu2, "D1": d1, "D2": d2}
    else:
        # the interior root lies outside the unit variance box: the cubics'
        # joint root at the origin takes over (the common layer is unused)
        # whenever the value's Hessian there is positive semidefinite
        c = a0 / (1.0 - rho**2)
        psd = (
            c >= a1 - TOL
            and c >= a2 - TOL
            and (c - a1) * (c - a2) >= rho**2 * c**2 - TOL
        )
        if psd:
            return (label, 0.0, 0.0, 1.0, True)
        residuals[label] = {
            "nu1": nu1, "nu2": nu2, "origin_psd": psd,
        }
    # degenerate ties (threshold equal to the active target, e.g. equal
    # weights on the flat optimal face) are value-neutral: admit the corner
    # with the strictness relaxed rather than leaving a gap
    for label in ("DD1", "DD2"):
        hit = _try_corner(label, weights, d1, d2, rho,
                          dict(residuals), slack=-TOL)
        if hit is not None:
            return hit
    raise ClassificationError("no region's feasibility predicates hold",
                              residuals)


def rate_triple_gaussian(solution, targets=None, spec=None):
    """(R0, R1, R2) of a solution; the alpha-weighted sum equals rd_value.

    For representable solutions these are the closed-form expressions in the
    parameters and the targets; non-representable solutions have zero private
    rates with everything in the common layer by construction.
    """
    d1, d2 = solution.targets if targets is None else (targets[0], targets[1])
    rho = solution.rho if spec is None else spec.rho
    a0 = solution.weights.a0
    if not solution.representable:
        return (solution.rd_value / a0 if a0 > 0 else 0.0, 0.0, 0.0)
    m1, m2, s0 = solution.m1, solution.m2, solution.sigma0sq
    if not np.isfinite(m1):  # special-case regions carry their rates directly
        return solution.rate_triple
    det = _det_m(m1, m2, s0, rho)
    r0 = 0.5 * math.log((1.0 - rho**2) / det)
    r1 = 0.5 * math.log((1.0 - m1 * m1 * s0) / d1)
    r2 = 0.5 * math.log((1.0 - m2 * m2 * s0) / d2)
    return (r0, r1, r2)


def certificate(m1, m2, sigma0sq, rho, weights, targets):
    """Certificate bundle for a representable parameter set."""
    a0, a1, a2 = weights.as_tuple()
    d1, d2 = float(targets[0]), float(targets[1])
    s0 = sigma0sq
    if m1 <= 0 or m2 <= 0:
        raise RegimeError("certificate requires positive loadings")
    M = np.array(
        [
            [1.0 - m1 * m1 * s0, rho - m1 * m2 * s0],
            [rho - m1 * m2 * s0, 1.0 - m2 * m2 * s0],
        ]
    )
    det_M = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if det_M <= 0:
        raise RegimeError("singular conditional covariance")
    H = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det_M
    det_H = 1.0 / det_M
    b = -m1 * m2 * H[0, 1]
    omega1 = (m1 - m2 * rho) * det_H / (2.0 * (a1 / a0) * m1)
    omega2 = (m2 - m1 * rho) * det_H / (2.0 * (a2 / a0) * m2)
    eta1 = b / m2**2 + 2.0 * (a2 / a0) * omega2
    eta2 = b / m1**2 + 2.0 * (a1 / a0) * omega1
    fa1, fa2 = f_alpha(m1, m2, s0, rho, weights)
    gamma1 = fa1 * det_H**2 / (2.0 * (a1 / a0) * m1)
    gamma2 = fa2 * det_H**2 / (2.0 * (a2 / a0) * m2)
    b1 = a0 * M[0, 0] * (m1 - m2 * rho) * det_H / (2.0 * m1 * d1)
    b2 = a0 * M[1, 1] * (m2 - m1 * rho) * det_H / (2.0 * m2 * d2)
    det_G1 = 2.0 * (gamma1 + eta1 * b1 / a1)
    det_G2 = 2.0 * (gamma2 + eta2 * b2 / a2)
    K0 = (
        math.sqrt(
            det_H ** (1.0 - a1 / a0 - a2 / a0)
            * det_G1 ** (a1 / a0)
            * det_G2 ** (a2 / a0)
        )
        / (2.0 * math.pi)
    )
    sv1 = 0.5 * (1.0 / omega1 - a1 / b1) if b1 > 0 and omega1 > 0 else 0.0
    sv2 = 0.5 * (1.0 / omega2 - a2 / b2) if b2 > 0 and omega2 > 0 else 0.0
    return CertificateBundle(
        H=H, b=float(b), omega1=float(omega1), omega2=float(omega2),
        eta1=float(eta1), eta2=float(eta2), gamma1=float(gamma1),
        gamma2=float(gamma2), b1=float(b1), b2=float(b2), K0=float(K0),
        sigma_v1_sq=float(sv1), sigma_v2_sq=float(sv2), det_H=float(det_H),
        det_G1=float(det_G1), det_G2=float(det_G2),
    )


def solve_gaussian_rd(weights, targets, spec):
    """Full closed-form solution: special cases, else region classification,
    rd value, rate triple and certificate."""
    d1, d2 = float(targets[0]), float(targets[1])
    rho = spec.rho
    a0, a1, a2 = weights.as_tuple()
    sc = special_case_rd(weights, targets, spec)
    if sc is not None:
        rates = _special_case_rates(weights, (d1, d2), sc)
        return GaussianSolution(
            m1=float("nan"), m2=float("nan"), sigma0sq=float("nan"),
            region="SPECIAL", rd_value=sc, rate_triple=rates,
            certificate=None, weights=weights, targets=(d1, d2), rho=rho,
            representable=True,
            notes=("trivial-regime closed form; no scalar-U parameters",),
        )
    region, m1, m2, s0, rep = classify_region(weights, targets, spec)
    notes = ()
    if rep:
        det = _det_m(m1, m2, s0, rho)
        r0 = 0.5 * math.log((1.0 - rho**2) / det)
        r1 = 0.5 * math.log((1.0 - m1 * m1 * s0) / d1)
        r2 = 0.5 * math.log((1.0 - m2 * m2 * s0) / d2)
        rd = a0 * r0 + a1 * r1 + a2 * r2
        if min(m1, m2) > 0:
            cert = certificate(m1, m2, s0, rho, weights, (d1, d2))
        else:
            cert = None
            notes = (
                "common layer unused (zero loadings); the certificate "
                "quantities are undefined at m=0",
            )
        rates = (r0, r1, r2)
    else:
        cert = None
        if region == "XIAO":
            rd = 0.5 * a0 * math.log((1.0 - rho**2) / (d1 * d2))
            notes = (
                "positive-part clamp active: the optimal common variable is "
                "not scalar; value from the clamped closed form",
            )
        else:  # successive-refinement slack corner
            det = _det_m(m1, m2, s0, rho)
            rd = 0.5 * a0 * math.log((1.0 - rho**2) / det)
            notes = (
                "slack private constraint: achieved distortion is below the "
                "target at zero private rate",
            )
        rates = (rd / a0, 0.0, 0.0)
    return GaussianSolution(
        m1=float(m1), m2=float(m2), sigma0sq=float(s0), region=region,
        rd_value=float(rd), rate_triple=rates, certificate=cert,
        weights=weights, targets=(d1, d2), rho=rho, representable=rep,
        notes=notes,
    )


def _special_case_rates(weights, targets, rd):
    a0, a1, a2 = weights.as_tuple()
    d1, d2 = targets
    r1 = max(0.0, 0.5 * math.log(1.0 / d1))
    r2 = max(0.0, 0.5 * math.log(1.0 / d2))
    if a0 == 0:
        return (0.0, 0.0, 0.0)
    if (a2 == 0 and a1 > a0 > 0) or d2 >= 1.0:
        return (r1, 0.0, 0.0)
    if (a1 == 0 and a2 > a0 > 0) or d1 >= 1.0:
        return (r2, 0.0, 0.0)
    return (0.0, r1, r2)


def wyner_ci(targets, spec):
    """Lossy common information (minimum common rate keeping the total rate
    at the joint RD function), with its case label.

    Case 4 sub-case 3 is stated in the source analysis only by symmetry with
    sub-case 2; the symmetric formula is implemented (inferred-by-symmetry).
    """
    rho = spec.rho
    d1, d2 = float(targets[0]), float(targets[1])
    if d1 <= 0 or d2 <= 0:
        raise RegimeError("target distortions must be positive")
    if d1 >= 1.0 and d2 >= 1.0:
        return 0.0, "degenerate-both"
    if d1 >= 1.0:
        return 0.5 * math.log(1.0 / d2), "degenerate-1"
    if d2 >= 1.0:
        return 0.5 * math.log(1.0 / d1), "degenerate-2"
    ratio12 = (1.0 - d1) / (1.0 - d2)
    prod = (1.0 - d1) * (1.0 - d2)
    r2 = rho**2
    if ratio12 < r2:
        return 0.5 * math.log(1.0 / d2), "case1"
    if 1.0 / ratio12 < r2:
        return 0.5 * math.log(1.0 / d1), "case2"
    if prod <= r2:
        den = d1 * d2 - (rho - math.sqrt(prod)) ** 2
        return 0.5 * math.log((1.0 - r2) / den), "case3"
    if d1 <= 1.0 - rho and d2 <= 1.0 - rho:
        return 0.5 * math.log((1.0 + rho) / (1.0 - rho)), "case4.1"
    if d2 > 1.0 - rho:
        den = r2 + d2 - r2 / (1.0 - d2)
        return 0.5 * math.log((1.0 - r2) / den), "case4.2"
    den = r2 + d1 - r2 / (1.0 - d1)
    return 0.5 * math.log((1.0 - r2) / den), "case4.3"


def wyner_corner(targets, spec):
    """Rate triple of the common-information corner at equal unit weights.

    The equal-weights optimum is degenerate (many rate splits share the
    weighted value); this returns the representative with maximal common
    rate, whose R0 equals wyner_ci. R0 is computed through the covariance
    determinant of the corner's parameters (independently of the wyner_ci
    closed forms) wherever a scalar parameter set exists.
    """
    rho = spec.rho
    d1, d2 = float(targets[0]), float(targets[1])
    cw, case = wyner_ci(targets, spec)
    if case.startswith("degenerate"):
        return (cw, 0.0, 0.0), case
    if case == "case1":
        m1, m2, s0 = rho, 1.0, 1.0 - d2
        r1 = r2_ = 0.0
    elif case == "case2":
        m1, m2, s0 = 1.0, rho, 1.0 - d1
        r1 = r2_ = 0.0
    elif case == "case3":
        m1, m2, s0 = math.sqrt(1.0 - d1), math.sqrt(1.0 - d2), 1.0
        r1 = r2_ = 0.0
    elif case == "case4.1":
        m1 = m2 = math.sqrt(rho)
        s0 = 1.0
        r1 = 0.5 * math.log((1.0 - rho) / d1)
        r2_ = 0.5 * math.log((1.0 - rho) / d2)
    elif case == "case4.2":
        s0 = 1.0 - d2
        m1, m2 = rho / s0, 1.0
        r1 = 0.5 * math.log((1.0 - rho**2 / s0) / d1)
        r2_ = 0.0
    else:  # case4.3
        s0 = 1.0 - d1
        m1, m2 = 1.0, rho / s0
        r1 = 0.0
        r2_ = 0.5 * math.log((1.0 - rho**2 / s0) / d2)
    det = _det_m(m1, m2, s0, rho)
    r0 = 0.5 * math.log((1.0 - rho**2) / det)
    return (r0, r1, r2_), case


def tradeoff_rows(rho, d2, d1_grid):
    """Common-rate vs private-rate tradeoff table at equal unit weights.

    One row per swept D1: the corner's R0, the private remainder R1+R2, the
    total weighted value, the region case, and whether the corner's R0
    equals the common information (cases 1-3).
    """
    spec = GaussianSpec(rho)
    w = Weights(1.0, 1.0, 1.0)
    rows = []
    for d1 in d1_grid:
        (r0, r1, r2), case = wyner_corner((d1, d2), spec)
        sol = solve_gaussian_rd(w, (d1, d2), spec)
        rows.append({
            "axis_value": d1,
            "R0": r0,
            "R1plusR2": r1 + r2,
            "rd_nats": sol.rd_value,
            "case": case,
            "wyner_point": case in ("case1", "case2", "case3"),
        })
    return rows
