"""Executing a plan on a credal state: admissible actions and robustness."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .closed_form import ITERATED, NoClosedFormCost, RegionBounds, min_closed_form_cost
from .config import ProblemConfig, SolverSettings
from .credal import CredalState, Observation, update
from .plan import LADDER_RTOL, OffLadderError, Plan
from .value_iteration import SolveError, closed_form_plan, solve


class Action(str, enum.Enum):
    CONTINUE = "Continue"
    STOP0 = "Stop0"  # decide "Smaller"
    STOP1 = "Stop1"  # decide "Larger"

    @property
    def is_stop(self) -> bool:
        return self is not Action.CONTINUE

    def mirrored(self) -> "Action":
        return {Action.STOP0: Action.STOP1, Action.STOP1: Action.STOP0}.get(self, self)


_ORDER = (Action.CONTINUE, Action.STOP0, Action.STOP1)


class RefinementRequired(RuntimeError):
    """The whole credal segment lies in the Indeterminate band."""


@dataclass(frozen=True)
class RobustnessReport:
    tau: float
    admissible: frozenset
    robust: bool
    indeterminate_overlap: float
    fully_indeterminate: bool
    tie: bool = False

    def sorted_admissible(self) -> list[Action]:
        return [a for a in _ORDER if a in self.admissible]

    def mirrored(self) -> "RobustnessReport":
        return RobustnessReport(
            self.tau, frozenset(a.mirrored() for a in self.admissible), self.robust,
            self.indeterminate_overlap, self.fully_indeterminate, self.tie,
        )


def _overlap(a: float, b: float, lo: float, hi: float) -> Optional[float]:
    """Length of ``[a, b] & [lo, hi]``, or None when they are disjoint."""
    left, right = max(a, lo), min(b, hi)
    if left > right:
        return None
    return right - left


def classify(plan: Plan, state: CredalState) -> RobustnessReport:
    """Which regions the credal segment touches at its precision level.

    Admissible actions are the determined regions the segment intersects:
    each is optimal for some member of the credal set.  Partial overlap with
    the Indeterminate band makes the report non-robust but is not resolved.
    """
    b = plan.bounds_at(state.tau)
    lo, hi = state.mu_lo, state.mu_hi
    pieces = {}
    if b.b_continue > 0:
        pieces[Action.CONTINUE] = _overlap(lo, hi, -b.b_continue, b.b_continue)
    pieces[Action.STOP1] = _overlap(lo, hi, b.b_stop, math.inf)
    pieces[Action.STOP0] = _overlap(lo, hi, -math.inf, -b.b_stop)
    admissible = frozenset(a for a, length in pieces.items() if length is not None)

    width = hi - lo
    if width > 0:
        determined = math.fsum(length for length in pieces.values() if length is not None)
        overlap = min(1.0, max(0.0, (width - determined) / width))
    else:
        overlap = 0.0 if admissible else 1.0
    fully = not admissible
    robust = len(admissible) == 1 and overlap == 0.0
    tie = (Action.CONTINUE not in admissible and {Action.STOP0, Action.STOP1} <= admissible
           and state.midpoint == 0.0)
    return RobustnessReport(state.tau, admissible, robust, overlap, fully, tie)


def default_action(report: RobustnessReport, state: CredalState) -> Action:
    """Anytime choice among admissible actions.

    Continue wins when admissible.  Otherwise the stop that is optimal for
    the segment's midpoint prior; a midpoint of exactly 0 is a tie
    (``report.tie``) and returns Stop0.
    """
    if report.fully_indeterminate:
        raise RefinementRequired("refinement required: credal segment is entirely Indeterminate")
    if Action.CONTINUE in report.admissible:
        return Action.CONTINUE
    stops = report.admissible
    if len(stops) == 1:
        return next(iter(stops))
    return Action.STOP1 if state.midpoint > 0 else Action.STOP0


def step(plan: Plan, state: CredalState, obs: Observation | None = None):
    """Absorb ``obs`` (if any), classify, and pick the default action.

    Returns ``(action, new_state, report)``.
    """
    if obs is not None:
        if not math.isclose(obs.r_eff, plan.config.r, rel_tol=LADDER_RTOL):
            raise OffLadderError(
                f"off-ladder state: observation precision {obs.r_eff} != plan step {plan.config.r}"
            )
        state = update(state, obs)
    report = classify(plan, state)
    return default_action(report, state), state, report


@dataclass
class BankEntry:
    cost: float
    mode: str  # closed_form | iterated | lumped | failed
    plan: Optional[Plan] = None
    attempts: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.plan is not None


def plan_bank(base: ProblemConfig, costs: Iterable[float],
              settings: SolverSettings | None = None, *,
              lump_factor: int = 2, lump_settings: SolverSettings | None = None,
              lump_threshold: float | None = None) -> list[BankEntry]:
    """Plans for a finite set of observation costs sharing one prior.

    The smallest closed-form cost is located once and everything above it is
    stored directly.  The rest are iterated from the largest cost down; a
    cost whose solve hits a cap under ``settings`` is retried averaging
    ``lump_factor`` observations per epoch (precision and cost both scale by
    the factor) under ``lump_settings``.  ``lump_threshold`` lumps every cost
    at or below it straight away.  Entries come back in ascending cost order.

    Iterated plans sharing a ladder are then tightened against each other:
    the Stop region only grows with the cost and the Continue region only
    shrinks, so a certificate obtained at one cost carries over to the others.
    """
    settings = settings or SolverSettings()
    lump_settings = lump_settings or SolverSettings(
        **{**settings.to_dict(), "max_sweeps": SolverSettings().max_sweeps}
    )
    costs = sorted(float(c) for c in costs)
    if not costs:
        return []
    if any(c <= 0 for c in costs):
        raise ValueError("costs must be positive")
    try:
        c_dagger = min_closed_form_cost(base.r, base.tau0, base.delta, costs[-1])
    except NoClosedFormCost:
        c_dagger = math.inf

    entries = {}
    for c in reversed(costs):
        config = ProblemConfig(base.r, c, base.tau0, base.mu_lo, base.mu_hi)
        entry = BankEntry(c, "failed")
        if c > c_dagger:
            entry.plan, entry.mode = closed_form_plan(config, settings), "closed_form"
        else:
            direct = lump_threshold is None or c > lump_threshold
            if direct:
                try:
                    entry.plan = solve(config, settings)
                    entry.mode = entry.plan.provenance
                except SolveError as exc:
                    entry.attempts.append(f"{exc.kind}: {exc}")
            if entry.plan is None:
                try:
                    entry.plan = solve(config.lumped(lump_factor), lump_settings,
                                       lump=lump_factor)
                    entry.mode = "lumped"
                except SolveError as exc:
                    entry.attempts.append(f"lumped {exc.kind}: {exc}")
                    entry.error = "; ".join(entry.attempts)
        entries[c] = entry
    ordered = [entries[c] for c in costs]
    _tighten(ordered)
    return ordered


def _tighten(entries: list[BankEntry]) -> None:
    groups: dict[int, list[BankEntry]] = {}
    for e in entries:
        if e.plan is not None and e.plan.provenance == ITERATED:
            groups.setdefault(e.plan.lump, []).append(e)
    for group in groups.values():
        if len(group) < 2:
            continue
        depth = max(len(e.plan.levels) for e in group)
        b_stop = [[l.b_stop for l in e.plan.levels] for e in group]
        b_cont = [[l.b_continue for l in e.plan.levels] for e in group]
        for k in range(depth):
            best = math.inf
            for row in b_stop:  # ascending cost
                if k < len(row):
                    best = row[k] = min(row[k], best)
            best = 0.0
            for row in reversed(b_cont):
                if k < len(row):
                    best = row[k] = max(row[k], best)
        for e, stops, conts in zip(group, b_stop, b_cont):
            levels = tuple(
                RegionBounds(l.tau_level, bc, bs, l.provenance)
                for l, bc, bs in zip(e.plan.levels, conts, stops)
            )
            if levels != e.plan.levels:
                e.plan = replace(e.plan, levels=levels,
                                 solver={**e.plan.solver, "bank_tightened": True})
