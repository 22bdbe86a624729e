"""The persisted plan: per-level region thresholds plus provenance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .closed_form import CLOSED_FORM, ITERATED, RegionBounds, closed_form_regions
from .config import ProblemConfig
from .credal import CredalState

SCHEMA_VERSION = 1
LADDER_RTOL = 1e-9


class OffLadderError(ValueError):
    """A state or observation does not line up with the plan's precision ladder."""


@dataclass(frozen=True)
class Plan:
    """Decision regions for ``tau0 + k * config.r``, ``k = 0, 1, ...``.

    ``config`` is the task as solved: for a plan that lumps ``lump`` raw
    observations per epoch its ``r`` and ``c`` already include that factor.
    Beyond the last stored level a closed-form plan is evaluated on demand;
    an iterated plan ends on a level where stopping is optimal everywhere
    and that level is reused.
    """

    config: ProblemConfig
    levels: tuple[RegionBounds, ...]
    sweeps: int = 0
    lump: int = 1
    solver: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.levels:
            raise ValueError("a plan needs at least one level")
        if self.lump < 1:
            raise ValueError("lump must be a positive integer")
        for k, lev in enumerate(self.levels):
            expected = self.config.tau0 + k * self.config.r
            if not math.isclose(lev.tau_level, expected, rel_tol=LADDER_RTOL):
                raise ValueError(f"level {k} has tau {lev.tau_level}, expected {expected}")

    @property
    def provenance(self) -> str:
        return CLOSED_FORM if all(l.provenance == CLOSED_FORM for l in self.levels) else ITERATED

    @property
    def raw_precision(self) -> float:
        return self.config.r / self.lump

    @property
    def raw_cost(self) -> float:
        return self.config.c / self.lump

    def prior_state(self) -> CredalState:
        return CredalState(self.config.tau0, self.config.mu_lo, self.config.mu_hi)

    def level_index(self, tau: float) -> int:
        k = round((tau - self.config.tau0) / self.config.r)
        expected = self.config.tau0 + k * self.config.r
        if k < 0 or not math.isclose(tau, expected, rel_tol=LADDER_RTOL):
            raise OffLadderError(f"off-ladder state: tau={tau} is not tau0 + k*{self.config.r}")
        return k

    def bounds_at(self, tau: float) -> RegionBounds:
        k = self.level_index(tau)
        if k < len(self.levels):
            return self.levels[k]
        last = self.levels[-1]
        level_tau = self.config.tau0 + k * self.config.r
        if self.provenance == CLOSED_FORM:
            return closed_form_regions(self.config.c, self.config.r, level_tau)
        if last.b_stop == 0.0:
            return RegionBounds(level_tau, 0.0, 0.0, last.provenance)
        raise OffLadderError(f"off-ladder state: level {k} is past the plan's last level")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "lump": self.lump,
            "provenance": self.provenance,
            "sweeps": self.sweeps,
            "levels": [
                {"tau": l.tau_level, "b_continue": l.b_continue, "b_stop": l.b_stop,
                 "provenance": l.provenance}
                for l in self.levels
            ],
            "solver": dict(self.solver),
            "created_by": f"qbplan {__version__}",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported plan schema {d.get('schema')!r}")
        levels = tuple(
            RegionBounds(float(l["tau"]), float(l["b_continue"]), float(l["b_stop"]),
                         l["provenance"])
            for l in d["levels"]
        )
        return cls(
            config=ProblemConfig.from_dict(d["config"]),
            levels=levels,
            sweeps=int(d.get("sweeps", 0)),
            lump=int(d.get("lump", 1)),
            solver=dict(d.get("solver", {})),
        )
