"""Wasserstein distances: closed forms, sampling estimators, and bounds.

Conventions.  For p >= 1, W_p is the usual p-Wasserstein metric.  For
0 < p < 1 the cost |x - y|^p is itself a metric, so W_p denotes the optimal
expected cost without an outer root.  Three facts drive the experiments:

  * shift linearity (p >= 1):  W_p(u + U, U) = |u|;
  * for p < 1 only the sandwich
        max(|u|^p - 2 E|U|^p, 0) <= W_p(u + U, U) <= |u|^p  holds;
  * homogeneity: W_p(cX, cY) = |c| W_p(X, Y) for p >= 1 and |c|^p otherwise.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidDomainError


def min_exponent(p: float) -> float:
    """The outer exponent min(1, 1/p) collapses to: 1/p for p > 1, else 1
    (and for p < 1 there is no outer root at all, the cost is E|x-y|^p)."""
    if p <= 0:
        raise InvalidDomainError(f"order p must be positive, got {p}")
    return min(1.0, 1.0 / p)


def concentration_exponent(p: float) -> float:
    """min(1, p): the power of a scale factor that W_p picks up."""
    if p <= 0:
        raise InvalidDomainError(f"order p must be positive, got {p}")
    return min(1.0, p)


def w2_diag_gaussian(mean1, var1, mean2, var2) -> float:
    """W2 between Gaussians with diagonal covariances:
    sqrt( |m1 - m2|^2 + sum (sqrt v1 - sqrt v2)^2 )."""
    m1 = np.asarray(mean1, dtype=float)
    m2 = np.asarray(mean2, dtype=float)
    v1 = np.asarray(var1, dtype=float)
    v2 = np.asarray(var2, dtype=float)
    if np.any(v1 < 0) or np.any(v2 < 0):
        raise InvalidDomainError("variances must be >= 0")
    return float(
        np.sqrt(np.sum((m1 - m2) ** 2) + np.sum((np.sqrt(v1) - np.sqrt(v2)) ** 2))
    )


def _bures_trace_2x2(c1: np.ndarray, c2: np.ndarray) -> float:
    """tr( (c2^{1/2} c1 c2^{1/2})^{1/2} ) for symmetric PSD 2x2 blocks,
    via tr sqrt(M) = sqrt(tr M + 2 sqrt(det M))."""
    tr = float(np.trace(c1 @ c2))
    det = float(max(np.linalg.det(c1), 0.0) * max(np.linalg.det(c2), 0.0))
    inner = tr + 2.0 * math.sqrt(max(det, 0.0))
    return math.sqrt(max(inner, 0.0))


def w2_gaussian_2x2(mean1, cov1, mean2, cov2, position_weight: float = 1.0) -> float:
    """W2 between bivariate Gaussians in the weighted norm
    w * x_1^2 + x_2^2 (position component weighted by ``position_weight``).

    Rescaling the position coordinate by sqrt(w) turns the weighted norm
    into the Euclidean one, where the Gaussian closed form applies.
    """
    if position_weight <= 0:
        raise InvalidDomainError("position weight must be positive")
    d = np.diag([math.sqrt(position_weight), 1.0])
    m1 = d @ np.asarray(mean1, dtype=float)
    m2 = d @ np.asarray(mean2, dtype=float)
    c1 = d @ np.asarray(cov1, dtype=float) @ d
    c2 = d @ np.asarray(cov2, dtype=float) @ d
    for c in (c1, c2):
        if abs(c[0, 1] - c[1, 0]) > 1e-10 * (1.0 + abs(c[0, 1])):
            raise InvalidDomainError("covariance blocks must be symmetric")
        if c[0, 0] < 0 or c[1, 1] < 0 or np.linalg.det(c) < -1e-12 * (1 + c[0, 0] + c[1, 1]):
            raise InvalidDomainError("covariance blocks must be PSD")
    gap = float(np.trace(c1) + np.trace(c2)) - 2.0 * _bures_trace_2x2(c1, c2)
    return float(math.sqrt(np.sum((m1 - m2) ** 2) + max(gap, 0.0)))


def wp_empirical_1d(x, y, p: float) -> float:
    """Sorted-sample estimator of W_p between two equal-size 1d samples.

    For p >= 1 the sorted coupling is optimal among couplings of the
    empirical measures; for p < 1 it is an upper bound on the optimal cost
    (concave costs need not couple monotonically), which is the side the
    two-sided shift bound requires.
    """
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InvalidDomainError("need two 1d samples of equal size")
    diffs = np.abs(xs - ys)
    if p >= 1.0:
        return float(np.mean(diffs ** p) ** (1.0 / p))
    return float(np.mean(diffs ** p))


def w2_product(per_mode_distances) -> float:
    """W2 of products of independent mode laws: root-sum-square of the
    per-mode distances (the product coupling is optimal mode by mode)."""
    d = np.asarray(per_mode_distances, dtype=float)
    if np.any(d < 0):
        raise InvalidDomainError("per-mode distances must be >= 0")
    return float(np.sqrt(np.sum(d * d)))


def shift_bounds(u_norm: float, p: float, abs_moment_p: float) -> tuple[float, float]:
    """Two-sided bound for W_p(u + U, U).

    p >= 1: both sides equal |u| (shift linearity).  p < 1: the lower bound
    is max(|u|^p - 2 E|U|^p, 0) and the upper is |u|^p.
    """
    u = abs(float(u_norm))
    if p >= 1.0:
        return u, u
    return max(u ** p - 2.0 * abs_moment_p, 0.0), u ** p


def shift_linearity_check(
    u: float,
    law_sampler,
    p: float,
    n: int,
    rng: np.random.Generator,
    reps: int = 20,
) -> dict:
    """Monte-Carlo check of the shift identity/bounds for a scalar law.

    ``law_sampler(n, rng)`` must return n iid draws.  Returns a report with
    the mean estimate over ``reps`` repetitions, its standard error, the
    theoretical bounds, and a pass flag (|estimate - |u|| <= 4 se for p >= 1,
    containment in the sandwich for p < 1).
    """
    ests = np.empty(reps)
    for r in range(reps):
        xs = law_sampler(n, rng) + u
        ys = law_sampler(n, rng)
        ests[r] = wp_empirical_1d(xs, ys, p)
    est = float(np.mean(ests))
    se = float(np.std(ests, ddof=1) / math.sqrt(reps))
    if p >= 1.0:
        target = abs(u)
        ok = abs(est - target) <= 4.0 * se
        lo = hi = target
    else:
        moment = float(np.mean(np.abs(law_sampler(n, rng)) ** p))
        lo, hi = shift_bounds(u, p, moment)
        ok = (est >= lo - 4.0 * se) and (est <= hi + 4.0 * se)
    return {
        "estimate": est,
        "se": se,
        "lower": lo,
        "upper": hi,
        "n": n,
        "reps": reps,
        "pass": bool(ok),
    }


def homogeneity_check(
    c: float,
    law_sampler,
    p: float,
    n: int,
    rng: np.random.Generator,
    reps: int = 20,
) -> dict:
    """Monte-Carlo check that scaling both marginals by c scales W_p by
    |c| (p >= 1) or |c|^p (p < 1)."""
    base = np.empty(reps)
    scaled = np.empty(reps)
    for r in range(reps):
        xs = law_sampler(n, rng)
        ys = law_sampler(n, rng) + 1.0  # separate the marginals
        base[r] = wp_empirical_1d(xs, ys, p)
        scaled[r] = wp_empirical_1d(c * xs, c * ys, p)
    factor = abs(c) ** concentration_exponent(p)
    diff = scaled - factor * base
    est = float(np.mean(diff))
    se = float(np.std(diff, ddof=1) / math.sqrt(reps))
    ok = abs(est) <= 4.0 * max(se, 1e-300)
    return {"estimate": est, "se": se, "factor": factor, "pass": bool(ok)}


def ergodic_bound(
    t: float,
    h_norm: float,
    eps: float,
    p: float,
    c_star: float,
    rate: float,
    abs_moment: float,
) -> float:
    """Right side of the exponential ergodic estimate

        W_p(X_t(h), equilibrium) <= (C e^{-rate t} |h|)^{min(1,p)}
                                    + (eps C e^{-rate t})^{min(1,p)} * m,

    where m is the min(1,p)-th absolute moment of the unit-noise
    equilibrium."""
    a = concentration_exponent(p)
    decay = c_star * math.exp(-rate * t)
    return (decay * h_norm) ** a + (eps * decay) ** a * abs_moment
