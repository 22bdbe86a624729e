"""Credal sets of Gaussians with a common precision and an interval of means.

Only the extreme means are stored.  Every query answered here (event
probabilities, region membership) is monotone in the mean, so its extrema
over convex mixtures are attained at the two endpoint Gaussians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .special import std_normal_cdf


@dataclass(frozen=True)
class Observation:
    x: float
    r_eff: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise ValueError("observation value must be finite")
        if not (self.r_eff > 0 and math.isfinite(self.r_eff)):
            raise ValueError("observation precision must be positive")


@dataclass(frozen=True)
class EventBounds:
    """Lower and upper probability of the event ``theta > 0``."""

    p_lower: float
    p_upper: float


@dataclass(frozen=True)
class CredalState:
    tau: float
    mu_lo: float
    mu_hi: float
    obs_count: int = 0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive")
        if not (math.isfinite(self.mu_lo) and math.isfinite(self.mu_hi)):
            raise ValueError("means must be finite")
        if self.mu_lo > self.mu_hi:
            raise ValueError("mu_lo must not exceed mu_hi")
        if self.obs_count < 0:
            raise ValueError("obs_count must be non-negative")

    def width(self) -> float:
        return self.mu_hi - self.mu_lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.mu_lo + self.mu_hi)

    def mirrored(self) -> "CredalState":
        return replace(self, mu_lo=-self.mu_hi, mu_hi=-self.mu_lo)


def update(state: CredalState, obs: Observation) -> CredalState:
    """Condition every member on one observation (conjugate normal update)."""
    return update_batch(state, 1, obs.x, obs.r_eff)


def update_batch(state: CredalState, n: int, x_bar: float, r_eff: float) -> CredalState:
    """Condition on ``n`` observations of precision ``r_eff`` with mean ``x_bar``."""
    if n < 1:
        raise ValueError("update_batch needs n >= 1")
    if not (r_eff > 0 and math.isfinite(r_eff)):
        raise ValueError("observation precision must be positive")
    if not math.isfinite(x_bar):
        raise ValueError("sample mean must be finite")
    gain = n * r_eff
    tau = state.tau + gain
    lo = (state.tau * state.mu_lo + gain * x_bar) / tau
    hi = (state.tau * state.mu_hi + gain * x_bar) / tau
    # the shrink map is increasing, but rounding can still cross a degenerate pair
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return CredalState(tau=tau, mu_lo=lo, mu_hi=hi, obs_count=state.obs_count + n)


def predicted_width(delta0: float, tau0: float, n: int, r: float) -> float:
    """Width of the posterior set after ``n`` observations of precision ``r``."""
    if tau0 <= 0 or r <= 0:
        raise ValueError("tau0 and r must be positive")
    return delta0 * tau0 / (tau0 + n * r)


def event_bounds(state: CredalState) -> EventBounds:
    rt = math.sqrt(state.tau)
    return EventBounds(std_normal_cdf(state.mu_lo * rt), std_normal_cdf(state.mu_hi * rt))


def lump(observations: Sequence[Observation]) -> Observation:
    """Average ``k`` equal-precision observations into one of precision ``k*r``."""
    if not observations:
        raise ValueError("cannot lump an empty list of observations")
    r = observations[0].r_eff
    if any(o.r_eff != r for o in observations):
        raise ValueError("lumped observations must share one precision")
    if len(observations) == 1:
        return observations[0]
    k = len(observations)
    return Observation(x=math.fsum(o.x for o in observations) / k, r_eff=k * r)
