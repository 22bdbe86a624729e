"""Problem and solver configuration."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, asdict, replace


@dataclass(frozen=True)
class ProblemConfig:
    """One planning task.

    ``r`` is the precision (inverse variance) of a single observation and
    ``c`` its cost in loss units.  The prior credal set holds Gaussians of
    precision ``tau0`` whose means span ``[mu_lo, mu_hi]``.
    """

    r: float
    c: float
    tau0: float
    mu_lo: float
    mu_hi: float

    def __post_init__(self):
        for name in ("r", "c", "tau0", "mu_lo", "mu_hi"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.mu_lo > self.mu_hi:
            raise ValueError("mu_lo must not exceed mu_hi")

    @property
    def delta(self) -> float:
        return self.mu_hi - self.mu_lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.mu_lo + self.mu_hi)

    def lumped(self, k: int) -> "ProblemConfig":
        """Config seen by a plan that averages ``k`` raw observations per epoch."""
        return replace(self, r=k * self.r, c=k * self.c)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        return cls(**{k: d[k] for k in ("r", "c", "tau0", "mu_lo", "mu_hi")})


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of the value-iteration engine.

    ``mu_max=None`` means ``max(|mu_lo|, |mu_hi|) + 6/sqrt(tau0)``.
    """

    grid_points: int = 2001
    quad_order: int = 32
    quad_span: float = 8.0
    mu_max: float | None = None
    k_max: int = 200
    max_sweeps: int = 50
    eps_eq: float = 1e-9

    def __post_init__(self):
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")
        if self.quad_order < 2:
            raise ValueError("quad_order must be at least 2")
        if self.k_max < 1 or self.max_sweeps < 1:
            raise ValueError("k_max and max_sweeps must be positive")
        if self.mu_max is not None and self.mu_max <= 0:
            raise ValueError("mu_max must be positive")

    def resolved_mu_max(self, config: ProblemConfig) -> float:
        if self.mu_max is not None:
            return float(self.mu_max)
        return max(abs(config.mu_lo), abs(config.mu_hi)) + 6.0 / math.sqrt(config.tau0)

    @classmethod
    def from_env(cls, **overrides) -> "SolverSettings":
        """Defaults, with ``QBPLAN_MAX_SWEEPS`` applied unless overridden."""
        env = os.environ.get("QBPLAN_MAX_SWEEPS")
        if env is not None and "max_sweeps" not in overrides:
            overrides["max_sweeps"] = int(env)
        return cls(**overrides)

    def to_dict(self) -> dict:
        return asdict(self)
