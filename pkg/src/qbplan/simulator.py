"""Monte Carlo episodes under a fixed ground-truth mean.

Episode ``i`` of a run with master seed ``s`` uses the integer seed

    int.from_bytes(sha256(f"{s}:{i}".encode()).digest()[:8], "little")

fed to ``numpy.random.default_rng``.  When theta is drawn from a law, it is
the first draw of that stream; observations follow as standard normals
scaled by ``1/sqrt(r_raw)``.  Two plans run with the same seed therefore see
the same observation stream.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .config import ProblemConfig, SolverSettings
from .credal import Observation, lump
from .plan import Plan
from .policy import Action, step
from .value_iteration import SolveError, solve

ThetaSource = Union[float, Callable[[np.random.Generator], float]]

TRACE_COLUMNS = ["step", "tau", "mu_lo", "mu_hi", "action", "robust", "admissible", "x"]


class StepCapExceeded(RuntimeError):
    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace


def episode_seed(master_seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{int(master_seed)}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def terminal_loss(theta: float, action: Action) -> float:
    """Loss of a terminal decision: 0 when right, ``|theta|`` when wrong."""
    if action is Action.STOP0:
        return 0.0 if theta <= 0 else theta
    if action is Action.STOP1:
        return 0.0 if theta > 0 else -theta
    raise ValueError("terminal loss needs a stop action")


def is_correct(theta: float, action: Action) -> bool:
    # at theta == 0 a wrong Stop1 still costs nothing, so loss alone can't tell
    return (action is Action.STOP0) == (theta <= 0)


def step_cap(plan: Plan) -> int:
    """Ten times the expected horizon ``(b_stop(tau0) * sqrt(tau0))**2``, in epochs."""
    b0 = plan.levels[0].b_stop
    horizon = (b0 * math.sqrt(plan.config.tau0)) ** 2
    return 10 * max(1, math.ceil(horizon))


@dataclass
class EpisodeResult:
    theta_true: float
    final_action: Action
    n_obs: int
    terminal_loss: float
    total_loss: float
    robustness_incidents: int
    epochs: int
    trace: Optional[list] = None


def run_episode(plan: Plan, theta_true: ThetaSource, seed: int, *,
                keep_trace: bool = False, max_steps: int | None = None) -> EpisodeResult:
    """Observe until the plan's default action is a stop.

    ``n_obs`` counts raw observations, so a plan that lumps ``k`` per epoch
    adds ``k`` per epoch and each costs ``plan.raw_cost``.
    """
    rng = np.random.default_rng(seed)
    theta = float(theta_true(rng)) if callable(theta_true) else float(theta_true)
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    cap = max_steps if max_steps is not None else step_cap(plan)
    r_raw = plan.raw_precision
    sd = 1.0 / math.sqrt(r_raw)

    state = plan.prior_state()
    action, state, report = step(plan, state)
    trace = [] if keep_trace else None
    incidents = 0
    epoch = 0
    x_last = None
    while True:
        if not report.robust:
            incidents += 1
        if keep_trace:
            trace.append([epoch, state.tau, state.mu_lo, state.mu_hi, action.value,
                          report.robust, "|".join(a.value for a in report.sorted_admissible()),
                          x_last])
        if action.is_stop:
            break
        if epoch >= cap:
            raise StepCapExceeded(f"episode exceeded {cap} epochs", trace)
        raw = [Observation(theta + sd * float(rng.standard_normal()), r_raw)
               for _ in range(plan.lump)]
        obs = lump(raw)
        x_last = obs.x
        action, state, report = step(plan, state, obs)
        epoch += 1

    n_obs = epoch * plan.lump
    term = terminal_loss(theta, action)
    return EpisodeResult(theta, action, n_obs, term, term + n_obs * plan.raw_cost,
                         incidents, epoch + 1, trace)


@dataclass
class SimulationSummary:
    episodes: int
    failures: int
    mean_total_loss: float
    mean_n_obs: float
    std_n_obs: float
    decision_frequency: dict
    nonrobust_fraction: float
    master_seed: int
    correct_fraction: float = float("nan")
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "failures": self.failures,
            "mean_total_loss": self.mean_total_loss,
            "mean_n_obs": self.mean_n_obs,
            "std_n_obs": self.std_n_obs,
            "decision_frequency": dict(self.decision_frequency),
            "correct_fraction": self.correct_fraction,
            "nonrobust_fraction": self.nonrobust_fraction,
            "master_seed": self.master_seed,
            "errors": list(self.errors),
        }


def summarize(results: list[EpisodeResult], failures: list[str], master_seed: int) -> SimulationSummary:
    n = len(results)
    if n == 0:
        nan = float("nan")
        return SimulationSummary(0, len(failures), nan, nan, nan,
                                 {"Stop0": nan, "Stop1": nan}, nan, master_seed, nan, failures)
    n_obs = np.array([r.n_obs for r in results], dtype=float)
    counts = {"Stop0": 0, "Stop1": 0}
    for r in results:
        counts[r.final_action.value] += 1
    epochs = sum(r.epochs for r in results)
    return SimulationSummary(
        episodes=n,
        failures=len(failures),
        mean_total_loss=math.fsum(r.total_loss for r in results) / n,
        mean_n_obs=float(n_obs.mean()),
        std_n_obs=float(n_obs.std(ddof=1)) if n > 1 else 0.0,
        decision_frequency={k: v / n for k, v in counts.items()},
        nonrobust_fraction=sum(r.robustness_incidents for r in results) / epochs,
        master_seed=master_seed,
        correct_fraction=sum(is_correct(r.theta_true, r.final_action) for r in results) / n,
        errors=failures,
    )


def monte_carlo(plan: Plan, theta_source: ThetaSource, n: int, master_seed: int,
                keep_results: bool = False):
    """Run ``n`` seeded episodes; failed episodes are counted, not fatal."""
    if n < 1:
        raise ValueError("need at least one episode")
    results, failures = [], []
    for i in range(n):
        try:
            results.append(run_episode(plan, theta_source, episode_seed(master_seed, i)))
        except (StepCapExceeded, ValueError) as exc:
            failures.append(f"episode {i}: {exc}")
    summary = summarize(results, failures, master_seed)
    return (summary, results) if keep_results else summary


def trace_csv(trace: Iterable[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in trace:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                         for v in row])
    return buf.getvalue()


@dataclass
class AgentComparison:
    cost: float
    qb_sweeps: Optional[int]
    bayes_sweeps: Optional[int]
    qb_summary: Optional[SimulationSummary]
    bayes_summary: Optional[SimulationSummary]
    errors: list = field(default_factory=list)


def compare_agents(config: ProblemConfig, costs: Iterable[float], n: int, master_seed: int,
                   theta_source: ThetaSource = 0.0, settings: SolverSettings | None = None,
                   eps_bayes: float | None = None) -> list[AgentComparison]:
    """Quasi-Bayesian plan versus a single prior at the segment midpoint.

    The single-prior agent iterates until every Indeterminate interval is
    narrower than ``eps_bayes`` (default ``1e-3 * delta``); a sweep count of
    ``max_sweeps`` with an error entry means it never got there.
    """
    settings = settings or SolverSettings()
    tol = eps_bayes if eps_bayes is not None else 1e-3 * config.delta
    out = []
    for c in costs:
        cfg = ProblemConfig(config.r, c, config.tau0, config.mu_lo, config.mu_hi)
        bayes_cfg = ProblemConfig(config.r, c, config.tau0, cfg.midpoint, cfg.midpoint)
        row = AgentComparison(c, None, None, None, None)
        try:
            qb = solve(cfg, settings)
            row.qb_sweeps = qb.sweeps
            row.qb_summary = monte_carlo(qb, theta_source, n, master_seed)
        except SolveError as exc:
            row.qb_sweeps = exc.sweeps
            row.errors.append(f"quasi-Bayesian: {exc}")
        try:
            bayes = solve(bayes_cfg, settings, band_tol=tol)
            row.bayes_sweeps = bayes.sweeps
            row.bayes_summary = monte_carlo(bayes, theta_source, n, master_seed)
        except SolveError as exc:
            row.bayes_sweeps = exc.sweeps
            row.errors.append(f"Bayesian: {exc}")
        out.append(row)
    return out
