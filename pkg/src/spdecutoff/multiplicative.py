"""Small multiplicative noise: exact flows, moments, and profiles.

With mode-diagonal multiplicative forcing the solution of

    dX = A X dt + eps * (noise acting diagonally on X)

is a stochastic exponential computable in closed form per mode.  The
equilibrium is the point mass at zero, so the W2 distance to equilibrium is
the root second moment of the state, which is explicit for both Brownian and
finite-activity jump forcing.  Cutoff happens along any renormalization
schedule a(eps) with a -> 0 slowly enough that the noise correction to the
drift exponent vanishes at time |ln a| / lambda_lead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNoiseError,
    InvalidDomainError,
    InvalidTimeError,
    MarkOutOfRangeError,
    ScheduleRejectedError,
)
from .noise_sim import JumpRealization
from .spectral_core import EigenSystem, HeatLeadingData, ModeCoefficients, heat_leading_data


@dataclass(frozen=True)
class MultBrownianSpec:
    """Diagonal Brownian multiplicative forcing.

    ``g`` has shape (n_noises, n_modes): row i is the diagonal of the i-th
    noise operator, driven by an independent scalar Brownian motion.
    """

    system: EigenSystem
    g: np.ndarray
    eps: float

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if g.shape[1] != self.system.n_modes:
            raise DegenerateNoiseError("noise diagonals must match mode count")
        object.__setattr__(self, "g", g)
        if not (0.0 < self.eps < 1.0):
            raise InvalidDomainError(f"eps must lie in (0, 1), got {self.eps}")

    def g_sq_sum(self) -> np.ndarray:
        """sum_i g_i^2 per mode."""
        return np.sum(self.g ** 2, axis=0)

    def second_moment_drift(self) -> np.ndarray:
        """Per-mode exponent rate of E X^2 / 2: -lambda + eps^2 g_sq / 2."""
        return -self.system.lambdas + 0.5 * self.eps ** 2 * self.g_sq_sum()


def mult_brownian_flow_sample(
    t: float, h: ModeCoefficients, spec: MultBrownianSpec,
    rng: np.random.Generator, size: int | None = None,
) -> np.ndarray:
    """Exact draws of the Brownian multiplicative flow at time t.

    Mode j is lognormal:
        h_j exp( (-lambda_j - eps^2 g_sq_j / 2) t + eps sum_i g_ij B_i(t) ).
    Returns (n_modes,) or (size, n_modes).
    """
    t = float(t)
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t}")
    lam = spec.system.lambdas
    drift = (-lam - 0.5 * spec.eps ** 2 * spec.g_sq_sum()) * t
    n_noises = spec.g.shape[0]
    shape = (n_noises,) if size is None else (size, n_noises)
    bm = math.sqrt(t) * rng.standard_normal(shape)
    expo = drift + spec.eps * bm @ spec.g
    return h.values * np.exp(expo)


def mult_second_moment_exact(t: float, h: ModeCoefficients, spec: MultBrownianSpec) -> float:
    """E |X_t(h)|^2 = sum_j h_j^2 exp( 2 t (-lambda_j + eps^2 g_sq_j / 2) )."""
    t = float(t)
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t}")
    return float(np.sum(h.values ** 2 * np.exp(2.0 * t * spec.second_moment_drift())))


def _log_space_root_sum(values: np.ndarray, exponents: np.ndarray) -> float:
    """sqrt( sum values^2 exp(2 exponents) ) with zero terms dropped and the
    remaining sum shifted by its largest exponent (log-sum-exp)."""
    nz = values != 0.0
    if not np.any(nz):
        return 0.0
    logs = 2.0 * (np.log(np.abs(values[nz])) + exponents[nz])
    m = float(np.max(logs))
    return math.exp(0.5 * m) * math.sqrt(float(np.sum(np.exp(logs - m))))


def mult_distance_to_zero(t: float, h: ModeCoefficients, spec: MultBrownianSpec,
                          log_scale: float = 0.0) -> float:
    """W2(X_t(h), point mass at 0) * exp(log_scale) = renormalizable root
    second moment, assembled in log space."""
    t = float(t)
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t}")
    return _log_space_root_sum(h.values, t * spec.second_moment_drift() + log_scale)


# --------------------------------------------------------------------------
# Renormalization schedules
# --------------------------------------------------------------------------

_SCHEDULES = {
    "eps": lambda e: e,
    "sqrt": lambda e: math.sqrt(e),
    "log": lambda e: 1.0 / abs(math.log(e)),
}


def schedule_values(name: str, eps_grid) -> np.ndarray:
    """a(eps) over the grid; admissibility (a -> 0 and eps^2 |ln a| -> 0 for
    Brownian forcing, eps |ln a| -> 0 for jumps) is checked numerically:
    both sequences must be decreasing along the grid and small at the end."""
    if name not in _SCHEDULES:
        raise ScheduleRejectedError(f"unknown schedule {name!r}")
    eps = np.asarray(sorted(eps_grid, reverse=True), dtype=float)
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise ScheduleRejectedError("eps grid must lie in (0, 1)")
    a = np.array([_SCHEDULES[name](e) for e in eps])
    corr = eps * np.abs(np.log(a))
    if np.any(np.diff(a) > 0) or np.any(np.diff(corr) > 1e-12):
        raise ScheduleRejectedError(
            f"schedule {name!r} is not admissible on this grid: "
            "a(eps) and eps*|ln a(eps)| must both decrease"
        )
    if corr[-1] > 0.5 or a[-1] > 0.2:
        raise ScheduleRejectedError(
            f"schedule {name!r} has not entered the small-noise regime: "
            f"a = {a[-1]:.3g}, eps*|ln a| = {corr[-1]:.3g} at the finest grid point"
        )
    return a


def mult_profile(
    rho: float,
    h: ModeCoefficients,
    g,
    eps_grid,
    schedule: str = "eps",
) -> list[dict]:
    """Brownian multiplicative profile study at t = |ln a| / lambda_lead + rho.

    Each row carries the renormalized distance sqrt(E|X_t|^2)/a, the profile
    e^{-rho lambda_lead} |v|, the residual, and the residual rate ratio
    residual / (a^{1 - l1/l2} |h|) whose boundedness along the grid certifies
    the advertised decay rate.
    """
    leading = heat_leading_data(h)
    a_vals = schedule_values(schedule, eps_grid)
    eps_sorted = sorted((float(e) for e in eps_grid), reverse=True)
    l1 = leading.lambda_lead
    l2 = leading.lambda_next
    profile = math.exp(-l1 * rho) * leading.v_norm
    rows = []
    for eps, a in zip(eps_sorted, a_vals):
        spec = MultBrownianSpec(h.system, g, eps)
        t = abs(math.log(a)) / l1 + rho
        if t < 0:
            raise InvalidTimeError("rho drives the evaluation time negative")
        dist = mult_distance_to_zero(t, h, spec, log_scale=-math.log(a))
        residual = abs(dist - profile)
        rate = a ** (1.0 - l1 / l2) if l2 is not None else a
        rows.append(
            {
                "eps": eps,
                "a": float(a),
                "t": t,
                "distance": dist,
                "profile": profile,
                "residual": residual,
                "rate_ratio": residual / (rate * h.norm),
            }
        )
    return rows


# --------------------------------------------------------------------------
# Finite-activity multiplicative jumps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyMark:
    """One multiplicative jump mark: diagonal entries and Poisson rate."""

    values: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DegenerateNoiseError(f"jump rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class MultLevySpec:
    """Diagonal finite-activity multiplicative jumps, compensated.

    Every mark must satisfy eta <= |mark|_2 < 1 (marks below ``eta`` are
    truncated away; marks of size >= 1 could annihilate or flip a mode).
    """

    system: EigenSystem
    marks: tuple[LevyMark, ...]
    eta: float
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "marks", tuple(self.marks))
        if not self.marks:
            raise DegenerateNoiseError("need at least one jump mark")
        if not (0.0 < self.eta < 1.0):
            raise InvalidDomainError(f"eta must lie in (0, 1), got {self.eta}")
        if not (0.0 < self.eps < 1.0):
            raise InvalidDomainError(f"eps must lie in (0, 1), got {self.eps}")
        for m in self.marks:
            if m.values.shape != (self.system.n_modes,):
                raise DegenerateNoiseError("mark length must match mode count")
            nrm = float(np.linalg.norm(m.values))
            if not (self.eta <= nrm < 1.0):
                raise MarkOutOfRangeError(
                    f"mark norm {nrm} outside [eta, 1) = [{self.eta}, 1)"
                )
            if np.any(np.abs(m.values) >= 1.0):
                raise MarkOutOfRangeError("every diagonal entry must satisfy |z_j| < 1")

    @property
    def total_rate(self) -> float:
        return float(sum(m.rate for m in self.marks))

    def compensator_drift(self) -> np.ndarray:
        """eps * sum_m rate_m z_j^m per mode (drift removed by compensation)."""
        acc = np.zeros(self.system.n_modes)
        for m in self.marks:
            acc += m.rate * m.values
        return self.eps * acc

    def variance_rate(self) -> np.ndarray:
        """eps^2 sum_m rate_m (z_j^m)^2: the second-moment exponent gain."""
        acc = np.zeros(self.system.n_modes)
        for m in self.marks:
            acc += m.rate * m.values ** 2
        return self.eps ** 2 * acc


def sample_levy_jump_realization(
    t: float, spec: MultLevySpec, rng: np.random.Generator
) -> JumpRealization:
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise InvalidTimeError(f"time must be finite and >= 0, got {t}")
    rate = spec.total_rate
    n = rng.poisson(rate * t)
    times = np.sort(rng.uniform(0.0, t, size=n))
    probs = np.array([m.rate for m in spec.marks]) / rate
    idx = rng.choice(len(spec.marks), size=n, p=probs)
    return JumpRealization(t=t, times=times, mark_indices=idx)


def levy_stochexp_from_jumps(
    t: float, h: ModeCoefficients, spec: MultLevySpec, jumps: JumpRealization
) -> np.ndarray:
    """Stochastic-exponential evaluation of the jump flow on one path:

        X_j(t) = h_j exp( t (-lambda_j - eps sum_m r_m z_j^m)
                          + sum_jumps log(1 + eps z_j) ).

    Only the jump count per mark matters -- the flow is a product of
    commuting per-jump factors -- but the full realization is accepted so the
    same path can be replayed through the interlacing oracle.
    """
    lam = spec.system.lambdas
    theta = (-lam - spec.compensator_drift()) * t
    for mi in jumps.mark_indices:
        theta = theta + np.log1p(spec.eps * spec.marks[mi].values)
    return h.values * np.exp(theta)


def levy_stochexp_sample(
    t: float, h: ModeCoefficients, spec: MultLevySpec, rng: np.random.Generator
) -> tuple[np.ndarray, JumpRealization]:
    """Sample one exact path of the multiplicative jump flow."""
    jumps = sample_levy_jump_realization(t, spec, rng)
    return levy_stochexp_from_jumps(t, h, spec, jumps), jumps


def levy_flow_oracle(
    t: float, h: ModeCoefficients, spec: MultLevySpec, jumps: JumpRealization
) -> np.ndarray:
    """Interlacing evaluation of the same path: deterministic decay between
    jumps, multiplication by (1 + eps z_j) at each jump.  Agrees with the
    stochastic exponential path by path."""
    lam = spec.system.lambdas
    drift = -lam - spec.compensator_drift()
    x = h.values.astype(float).copy()
    prev = 0.0
    for tau, mi in zip(jumps.times, jumps.mark_indices):
        x = x * np.exp(drift * (tau - prev))
        x = x * (1.0 + spec.eps * spec.marks[mi].values)
        prev = tau
    return x * np.exp(drift * (t - prev))


def levy_stochexp_batch(
    t: float, h: ModeCoefficients, spec: MultLevySpec,
    rng: np.random.Generator, size: int,
) -> np.ndarray:
    """(size, n_modes) exact draws; jump counts per mark are sufficient
    statistics, so the batch needs one Poisson array per mark."""
    lam = spec.system.lambdas
    theta = np.broadcast_to((-lam - spec.compensator_drift()) * t, (size, lam.size)).copy()
    for m in spec.marks:
        counts = rng.poisson(m.rate * t, size=size)
        theta += counts[:, None] * np.log1p(spec.eps * m.values)[None, :]
    return h.values * np.exp(theta)


def levy_second_moment_exact(t: float, h: ModeCoefficients, spec: MultLevySpec) -> float:
    """E |X_t(h)|^2 for the compensated jump flow.

    Per mode the exponent collects the drift and the compound-Poisson
    moment generating function of the jump sum:

        E X_j^2 = h_j^2 exp( -2 lambda_j t + t eps^2 sum_m r_m (z_j^m)^2 ... )

    exactly: exponent = 2t(-lambda_j - eps sum r z) + t sum_m r_m
    ((1 + eps z_j^m)^2 - 1), which simplifies to
    -2 lambda_j t + t eps^2 sum_m r_m (z_j^m)^2.
    """
    t = float(t)
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t}")
    lam = spec.system.lambdas
    expo = 2.0 * t * (-lam) + t * spec.variance_rate()
    return float(np.sum(h.values ** 2 * np.exp(expo)))


def levy_distance_to_zero(t: float, h: ModeCoefficients, spec: MultLevySpec,
                          log_scale: float = 0.0) -> float:
    """Renormalizable root second moment of the jump flow, in log space."""
    lam = spec.system.lambdas
    return _log_space_root_sum(
        h.values, t * (-lam + 0.5 * spec.variance_rate()) + log_scale
    )


def levy_mult_profile(
    rho: float,
    h: ModeCoefficients,
    marks,
    eta: float,
    eps_grid,
    schedule: str = "eps",
) -> list[dict]:
    """Jump-noise analogue of :func:`mult_profile` on the same schedule."""
    leading = heat_leading_data(h)
    a_vals = schedule_values(schedule, eps_grid)
    eps_sorted = sorted((float(e) for e in eps_grid), reverse=True)
    l1 = leading.lambda_lead
    l2 = leading.lambda_next
    profile = math.exp(-l1 * rho) * leading.v_norm
    rows = []
    for eps, a in zip(eps_sorted, a_vals):
        spec = MultLevySpec(h.system, tuple(marks), eta, eps)
        t = abs(math.log(a)) / l1 + rho
        if t < 0:
            raise InvalidTimeError("rho drives the evaluation time negative")
        dist = levy_distance_to_zero(t, h, spec, log_scale=-math.log(a))
        residual = abs(dist - profile)
        rate = a ** (1.0 - l1 / l2) if l2 is not None else a
        rows.append(
            {
                "eps": eps,
                "a": float(a),
                "t": t,
                "distance": dist,
                "profile": profile,
                "residual": residual,
                "rate_ratio": residual / (rate * h.norm),
            }
        )
    return rows
