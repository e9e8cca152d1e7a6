"""Core probability/distortion data types, validation and information measures.

All information quantities are computed and stored in nats. The conventions
0*log(0) = 0 and 0*log(0/0) = 0 are used throughout; a probability floor of
1e-300 is applied inside logarithms only after the zero-convention check, so
-inf never propagates from underflow (true zeros are handled exactly).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr

LOG_FLOOR = 1e-300

PMF_ATOL = 1e-12
COND_ATOL = 1e-10


class DimensionMismatchError(ValueError):
    """Alphabet sizes of the inputs do not agree."""


class DegenerateInputError(ValueError):
    """A normalization slice is entirely zero (underflow or invalid regime)."""


def safe_log(a):
    """Elementwise log with a 1e-300 floor; exact zeros map to log(1e-300).

    Intended for use in products of the form p*log(...) where the p factor is
    zero exactly where the argument is zero, so the floored value is inert.
    """
    return np.log(np.maximum(a, LOG_FLOOR))


@dataclass(frozen=True)
class JointPmf:
    """Finite joint source distribution p(x1, x2)."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        msg = validate(self)
        if msg is not None:
            raise ValueError(msg)

    @property
    def n1(self):
        return self.probs.shape[0]

    @property
    def n2(self):
        return self.probs.shape[1]

    @property
    def alphabet_sizes(self):
        return self.probs.shape

    def marginal1(self):
        return self.probs.sum(axis=1)

    def marginal2(self):
        return self.probs.sum(axis=0)


@dataclass(frozen=True)
class DistortionSpec:
    """Single-letter distortion matrices d1(x1, xhat1) and d2(x2, xhat2)."""

    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d1", np.asarray(self.d1, dtype=float))
        object.__setattr__(self, "d2", np.asarray(self.d2, dtype=float))
        for name, d in (("d1", self.d1), ("d2", self.d2)):
            if d.ndim != 2:
                raise ValueError(f"{name} must be a 2-d matrix")
            if not np.all(np.isfinite(d)):
                raise ValueError(f"{name} has non-finite entries")
            if np.any(d < 0):
                i, j = np.argwhere(d < 0)[0]
                raise ValueError(f"negative entry in {name} at ({i},{j})")

    @property
    def m1(self):
        return self.d1.shape[1]

    @property
    def m2(self):
        return self.d2.shape[1]


@dataclass(frozen=True)
class Weights:
    """Nonnegative layer weights (alpha0: common, alpha1/alpha2: private)."""

    a0: float
    a1: float
    a2: float

    def __post_init__(self):
        if self.a0 < 0 or self.a1 < 0 or self.a2 < 0:
            raise ValueError("weights must be nonnegative")
        if self.a0 == 0 and self.a1 == 0 and self.a2 == 0:
            raise ValueError("weights must not all be zero")

    def as_tuple(self):
        return (self.a0, self.a1, self.a2)

    def all_positive(self):
        return self.a0 > 0 and self.a1 > 0 and self.a2 > 0


@dataclass(frozen=True)
class Multipliers:
    """Nonnegative Lagrange multipliers for the two distortion constraints."""

    b1: float
    b2: float

    def __post_init__(self):
        if self.b1 < 0 or self.b2 < 0:
            raise ValueError("multipliers must be nonnegative")

    def as_tuple(self):
        return (self.b1, self.b2)


class CodingDistribution:
    """Conditional coding distribution p(u, xhat1, xhat2 | x1, x2).

    Stored in the factored form

        p(u | x1, x2) * p(xhat1 | x1, x2, u) * p(xhat2 | x1, x2, u)

    (xhat1 and xhat2 conditionally independent given (x1, x2, u)); the
    alternating-minimization iterates have exactly this form, and every rate
    and distortion functional used here depends only on the pairwise
    marginals with (x1, x2, u), so the representation is lossless for them.
    A dense 5-d ``values`` view is available for small alphabets. Factor
    arrays may be broadcast views (stride-0 along axes they do not use).
    """

    def __init__(self, p_u, p1, p2, shape=None):
        p_u = np.asarray(p_u, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        if shape is None:
            n1, n2, k = p_u.shape
            shape = (n1, n2, k, p1.shape[-1], p2.shape[-1])
        self.shape = tuple(shape)
        n1, n2, k, m1, m2 = self.shape
        self.p_u = np.broadcast_to(p_u, (n1, n2, k))
        self.p1 = np.broadcast_to(p1, (n1, n2, k, m1))
        self.p2 = np.broadcast_to(p2, (n1, n2, k, m2))

    @classmethod
    def from_dense(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 5:
            raise ValueError("dense coding distribution must be 5-dimensional")
        p_u = values.sum(axis=(3, 4))
        with np.errstate(invalid="ignore", divide="ignore"):
            p1 = values.sum(axis=4) / p_u[..., None]
            p2 = values.sum(axis=3) / p_u[..., None]
        # where p(u|x) = 0, conditionals are irrelevant; use uniform placeholders
        m1 = values.shape[3]
        m2 = values.shape[4]
        p1 = np.where(p_u[..., None] > 0, p1, 1.0 / m1)
        p2 = np.where(p_u[..., None] > 0, p2, 1.0 / m2)
        obj = cls(p_u, p1, p2, shape=values.shape)
        obj._dense = values
        return obj

    @property
    def values(self):
        """Dense p(u, xhat1, xhat2 | x1, x2), assembled on demand."""
        dense = getattr(self, "_dense", None)
        if dense is None:
            dense = (
                self.p_u[:, :, :, None, None]
                * self.p1[:, :, :, :, None]
                * self.p2[:, :, :, None, :]
            )
            self._dense = dense
        return dense


class ReproductionPrior:
    """Free reproduction distribution q(u, xhat1, xhat2).

    Stored as q(u), q(xhat1|u), q(xhat2|u); the 3-d joint is their product.
    """

    def __init__(self, q_u, q1, q2):
        self.q_u = np.asarray(q_u, dtype=float)
        self.q1 = np.asarray(q1, dtype=float)
        self.q2 = np.asarray(q2, dtype=float)

    @classmethod
    def from_joint(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise ValueError("joint reproduction prior must be 3-dimensional")
        q_u = values.sum(axis=(1, 2))
        with np.errstate(invalid="ignore", divide="ignore"):
            q1 = values.sum(axis=2) / q_u[:, None]
            q2 = values.sum(axis=1) / q_u[:, None]
        q1 = np.where(q_u[:, None] > 0, q1, 1.0 / values.shape[1])
        q2 = np.where(q_u[:, None] > 0, q2, 1.0 / values.shape[2])
        return cls(q_u, q1, q2)

    @property
    def k(self):
        return self.q_u.shape[0]

    @property
    def values(self):
        return self.q_u[:, None, None] * self.q1[:, :, None] * self.q2[:, None, :]


def validate(obj):
    """Return None if all invariants of obj hold, else the first violation."""
    if isinstance(obj, JointPmf):
        p = obj.probs
        if p.ndim != 2:
            return "probs must be a 2-d matrix"
        if p.shape[0] < 1 or p.shape[1] < 1:
            return "alphabet sizes must be >= 1"
        if not np.all(np.isfinite(p)):
            idx = tuple(np.argwhere(~np.isfinite(p))[0])
            return f"non-finite entry at {idx}"
        if np.any(p < 0):
            idx = tuple(np.argwhere(p < 0)[0])
            return f"negative entry at {idx}"
        s = p.sum()
        if abs(s - 1.0) > PMF_ATOL:
            return f"entries sum to {s!r}, expected 1 within {PMF_ATOL}"
        return None
    if isinstance(obj, ReproductionPrior):
        v = obj.values
        if np.any(v < 0):
            idx = tuple(np.argwhere(v < 0)[0])
            return f"negative entry at {idx}"
        s = v.sum()
        if abs(s - 1.0) > COND_ATOL:
            return f"entries sum to {s!r}, expected 1 within {COND_ATOL}"
        for name, q in (("q(xhat1|u)", obj.q1), ("q(xhat2|u)", obj.q2)):
            rows = q.sum(axis=1)
            bad = np.argwhere(
                (obj.q_u > 0) & (np.abs(rows - 1.0) > COND_ATOL)
            )
            if bad.size:
                u = int(bad[0][0])
                return f"{name} row u={u} sums to {rows[u]!r}"
        return None
    if isinstance(obj, CodingDistribution):
        for arr, name in ((obj.p_u, "p(u|x1,x2)"), (obj.p1, "p(xhat1|x1,x2,u)"),
                          (obj.p2, "p(xhat2|x1,x2,u)")):
            if np.any(arr < 0):
                idx = tuple(np.argwhere(arr < 0)[0])
                return f"negative entry in {name} at {idx}"
        totals = obj.p_u.sum(axis=2)
        bad = np.argwhere(np.abs(totals - 1.0) > COND_ATOL)
        if bad.size:
            x1, x2 = bad[0]
            return (
                f"conditional slice at (x1,x2)=({x1},{x2}) sums to "
                f"{totals[x1, x2]!r}, expected 1 within {COND_ATOL}"
            )
        for q, name in ((obj.p1, "p(xhat1|x1,x2,u)"), (obj.p2, "p(xhat2|x1,x2,u)")):
            rows = q.sum(axis=3)
            bad = np.argwhere(np.abs(rows - 1.0) > COND_ATOL)
            if bad.size:
                x1, x2, u = bad[0]
                return (
                    f"{name} slice at (x1,x2,u)=({x1},{x2},{u}) sums to "
                    f"{rows[x1, x2, u]!r}"
                )
        return None
    raise TypeError(f"cannot validate object of type {type(obj).__name__}")


def _check_dims(pmf, coding, dist=None):
    n1, n2, k, m1, m2 = coding.shape
    if (pmf.n1, pmf.n2) != (n1, n2):
        raise DimensionMismatchError(
            f"pmf alphabet {(pmf.n1, pmf.n2)} vs coding {(n1, n2)}"
        )
    if dist is not None:
        if dist.d1.shape != (n1, m1) or dist.d2.shape != (n2, m2):
            raise DimensionMismatchError(
                f"distortion shapes {dist.d1.shape}/{dist.d2.shape} vs "
                f"coding {(n1, m1)}/{(n2, m2)}"
            )


def rate_triple(pmf, coding):
    """(I(X1,X2;U), I(X1,X2;Xhat1|U), I(X1,X2;Xhat2|U)) in nats.

    Each component is clamped below at 0 (they can come out around -1e-16
    from rounding).
    """
    _check_dims(pmf, coding)
    P = pmf.probs
    # joint p(x1,x2,u) and marginal p(u)
    j_u = P[:, :, None] * coding.p_u
    q_u = j_u.sum(axis=(0, 1))
    i_u = rel_entr(j_u, P[:, :, None] * q_u[None, None, :]).sum()
    # conditional informations: depend only on p(x1,x2,u,xhat_i)
    i_cond = []
    for p_i in (coding.p1, coding.p2):
        j_i = j_u[..., None] * p_i  # p(x1,x2,u,xhat)
        q_i = j_i.sum(axis=(0, 1))  # p(u,xhat)
        # reference: p(x1,x2,u) * p(xhat|u)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = q_i / q_u[:, None]
        cond = np.where(q_u[:, None] > 0, cond, 0.0)
        ref = j_u[..., None] * cond[None, None, :, :]
        i_cond.append(rel_entr(j_i, ref).sum())
    return (max(i_u, 0.0), max(i_cond[0], 0.0), max(i_cond[1], 0.0))


def expected_distortions(pmf, coding, dist):
    """(E d1(X1,Xhat1), E d2(X2,Xhat2)) under the induced joint."""
    _check_dims(pmf, coding, dist)
    P = pmf.probs
    ed1 = np.einsum("ij,iju,ijua,ia->", P, coding.p_u, coding.p1, dist.d1)
    ed2 = np.einsum("ij,iju,ijub,jb->", P, coding.p_u, coding.p2, dist.d2)
    return (float(ed1), float(ed2))


def d_max(pmf, dist):
    """Per-layer expected distortion of the best constant reproduction.

    Targets at or above these values make the corresponding constraint
    inactive.
    """
    p1 = pmf.marginal1()
    p2 = pmf.marginal2()
    return (float((p1 @ dist.d1).min()), float((p2 @ dist.d2).min()))


def hamming_distortion(n1, n2=None):
    """Hamming distortion matrices for reproduction alphabets equal to the
    source alphabets."""
    if n2 is None:
        n2 = n1
    return DistortionSpec(
        1.0 - np.eye(n1), 1.0 - np.eye(n2)
    )


def dsbs(p_equal):
    """Doubly symmetric binary source with total P(X1 = X2) = p_equal."""
    if not 0.0 < p_equal < 1.0:
        raise ValueError("p_equal must be in (0, 1)")
    pe = p_equal / 2.0
    pd = (1.0 - p_equal) / 2.0
    return JointPmf(np.array([[pe, pd], [pd, pe]]))


def discretize_gaussian(rho, half_width, points):
    """Grid discretization of the zero-mean unit-variance bivariate Gaussian.

    The density with correlation rho is evaluated on a uniform points x points
    grid over [-half_width, half_width]^2 and renormalized; distortion
    matrices are squared differences of the grid coordinates (reproduction
    alphabets equal to the grid).
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("correlation out of range (-1, 1)")
    if points < 3:
        raise ValueError("grid must have at least 3 points")
    if half_width <= 0:
        raise ValueError("grid half-width must be positive")
    x = np.linspace(-half_width, half_width, points)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    quad = (x1**2 - 2 * rho * x1 * x2 + x2**2) / (1.0 - rho**2)
    dens = np.exp(-0.5 * quad)
    probs = dens / dens.sum()
    diff = x[:, None] - x[None, :]
    dmat = diff**2
    return JointPmf(probs), DistortionSpec(dmat.copy(), dmat.copy())


def load_source(data):
    """Parse the JSON source schema into (JointPmf, DistortionSpec).

    Schema: {"alphabet": [n1, n2], "probs": [[...]], "d1": [[...]],
    "d2": [[...]]}; d1/d2 may be omitted, defaulting to Hamming distortion on
    reproduction alphabets equal to the source alphabets.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    if "probs" not in data:
        raise ValueError("source is missing 'probs'")
    probs = np.asarray(data["probs"], dtype=float)
    if probs.ndim != 2:
        raise ValueError("'probs' must be a matrix (list of rows)")
    if "alphabet" in data:
        n1, n2 = data["alphabet"]
        if probs.shape != (n1, n2):
            raise ValueError(
                f"'probs' shape {probs.shape} does not match alphabet "
                f"[{n1}, {n2}]"
            )
    pmf = JointPmf(probs)
    has_d1 = data.get("d1") is not None
    has_d2 = data.get("d2") is not None
    if has_d1 or has_d2:
        if not (has_d1 and has_d2):
            raise ValueError("provide both 'd1' and 'd2' or neither")
        dist = DistortionSpec(np.asarray(data["d1"], float),
                              np.asarray(data["d2"], float))
        if dist.d1.shape[0] != pmf.n1 or dist.d2.shape[0] != pmf.n2:
            raise ValueError("distortion row counts must match the alphabet")
    else:
        dist = hamming_distortion(pmf.n1, pmf.n2)
    return pmf, dist
