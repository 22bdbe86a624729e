"""Sandwiching value iteration on a mean grid x precision ladder.

Two tables bracket the Bayes risk: ``lower`` starts at 0 and ``upper`` at the
immediate-decision risk.  Each sweep applies

    new(mu, tau) = min(rho0(mu, tau), E[prev(m, tau + r)] + c)

to both, where ``m = (tau*mu + r*y)/(tau + r)`` is the posterior mean after an
observation ``y ~ N(mu, 1/tau + 1/r)``.  Points where ``lower`` already equals
``rho0`` are certified Stop; points where ``upper`` is strictly below it are
certified Continue.

Precision levels run from ``tau0`` in steps of ``r`` up to the first level at
or above ``tau_double_prime(c)``.  From there on stopping is optimal at every
mean (any observation costs more than the largest stopping risk), so the risk
equals ``rho0`` exactly; the same argument makes ``rho0`` exact for every
``|mu| >= closed_form_regions(...).b_stop`` and is what the tables use for
posterior means beyond the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .closed_form import (
    CLOSED_FORM, ITERATED, RegionBounds, closed_form_regions, tau_double_prime,
    theorem1_condition,
)
from .config import ProblemConfig, SolverSettings
from .plan import Plan
from .special import SQRT_2PI, _omega


class SolveError(RuntimeError):
    """The engine could not certify a plan within its caps.

    ``kind`` is ``"ladder"`` (too many precision levels), ``"sweeps"`` (sweep
    budget exhausted) or ``"numeric"``.  ``bounds`` holds the last extracted
    regions, if any.
    """

    def __init__(self, kind: str, message: str, bounds=None, sweeps: int = 0):
        super().__init__(message)
        self.kind = kind
        self.bounds = bounds
        self.sweeps = sweeps


class ExtractionError(RuntimeError):
    """Certified points do not form the Continue / Indeterminate / Stop band layout."""


@dataclass(frozen=True)
class QuadratureRule:
    """Posterior-mean nodes and weights for every grid point of one level.

    The standardised predictive variable is integrated over ``[-span, span]``
    with Gauss-Legendre pieces split where the posterior mean crosses 0: the
    risk depends on ``|m|`` and the kink there costs Gauss-Hermite about
    three significant digits.
    """

    nodes: np.ndarray  # (n_mu, 2*order) posterior means
    weights: np.ndarray  # (n_mu, 2*order), rows sum to 1
    order: int


def predictive_rule(mu_grid: np.ndarray, tau: float, r: float, order: int,
                    span: float = 8.0) -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(order)
    # posterior mean m = mu + s*u with u standard normal
    s = math.sqrt(r / (tau * (tau + r)))
    cut = np.clip(-mu_grid / s, -span, span)
    lo = np.stack([np.full_like(cut, -span), cut], axis=1)
    hi = np.stack([cut, np.full_like(cut, span)], axis=1)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    u = (half[:, :, None] * x + mid[:, :, None]).reshape(len(mu_grid), -1)
    weights = (half[:, :, None] * w).reshape(len(mu_grid), -1)
    weights = weights * np.exp(-0.5 * u * u) / SQRT_2PI
    weights /= weights.sum(axis=1, keepdims=True)
    return QuadratureRule(mu_grid[:, None] + s * u, weights, order)


def _rho0(mu, tau):
    rt = math.sqrt(tau)
    return _omega(rt * np.abs(mu)) / rt


@dataclass(frozen=True)
class RiskGrid:
    mu_grid: np.ndarray
    tau_ladder: np.ndarray
    lower: np.ndarray  # (levels, n_mu)
    upper: np.ndarray
    rho0: np.ndarray
    sweep_count: int = 0
    rules: tuple = field(default=(), repr=False, compare=False)

    @property
    def step(self) -> float:
        return float(self.mu_grid[1] - self.mu_grid[0])


def ladder_levels(config: ProblemConfig) -> int:
    """Number of ladder rungs ending at the first one with ``tau >= tau_double_prime``."""
    gap = tau_double_prime(config.c) - config.tau0
    if gap <= 0:
        return 1
    return int(math.ceil(gap / config.r - 1e-12)) + 1


def default_mu_max(config: ProblemConfig, settings: SolverSettings) -> float:
    mu_max = settings.resolved_mu_max(config)
    b_stop0 = closed_form_regions(config.c, config.r, config.tau0).b_stop
    if settings.mu_max is None:
        return max(mu_max, b_stop0 + 1.0 / math.sqrt(config.tau0))
    if mu_max < b_stop0:
        raise ValueError(
            f"mu_max={mu_max} lies inside the region where stopping may not be optimal "
            f"(needs >= {b_stop0:.6g})"
        )
    return mu_max


def init_bounds(config: ProblemConfig, settings: SolverSettings | None = None,
                n_levels: int | None = None) -> RiskGrid:
    """Initial sandwich: ``lower = 0`` and ``upper = rho0`` everywhere."""
    settings = settings or SolverSettings()
    if n_levels is None:
        n_levels = ladder_levels(config)
    mu = np.linspace(0.0, default_mu_max(config, settings), settings.grid_points)
    taus = config.tau0 + config.r * np.arange(n_levels)
    rho0 = np.stack([_rho0(mu, t) for t in taus])
    rules = tuple(
        predictive_rule(mu, float(t), config.r, settings.quad_order, settings.quad_span)
        for t in taus
    )
    return RiskGrid(mu, taus, np.zeros_like(rho0), rho0.copy(), rho0, 0, rules)


def _expect(table_next, m, weights, mu_grid, tail):
    vals = np.interp(m, mu_grid, table_next)
    vals = np.where(m > mu_grid[-1], tail, vals)
    return (vals * weights).sum(axis=1)


def sweep(grid: RiskGrid, config: ProblemConfig) -> RiskGrid:
    """One Jacobi application of the risk recursion to both tables."""
    mu = grid.mu_grid
    n_levels = len(grid.tau_ladder)
    new_lo = np.empty_like(grid.lower)
    new_up = np.empty_like(grid.upper)
    c, r = config.c, config.r
    for k in range(n_levels):
        rule = grid.rules[k]
        m = np.abs(rule.nodes)
        tau_next = float(grid.tau_ladder[k]) + r
        tail = _rho0(m, tau_next)
        if k + 1 < n_levels:
            e_lo = _expect(grid.lower[k + 1], m, rule.weights, mu, tail)
            e_up = _expect(grid.upper[k + 1], m, rule.weights, mu, tail)
        else:
            e_lo = np.zeros(len(mu))
            e_up = (tail * rule.weights).sum(axis=1)
        new_lo[k] = np.minimum(grid.rho0[k], e_lo + c)
        new_up[k] = np.minimum(grid.rho0[k], e_up + c)
    if not (np.all(np.isfinite(new_lo)) and np.all(np.isfinite(new_up))):
        bad = np.argwhere(~(np.isfinite(new_lo) & np.isfinite(new_up)))[0]
        raise SolveError("numeric", f"non-finite risk at level {bad[0]}, mu index {bad[1]}")
    return replace(grid, lower=new_lo, upper=new_up, sweep_count=grid.sweep_count + 1)


def extract_regions(grid: RiskGrid, eps_eq: float = 1e-9) -> list[RegionBounds]:
    """Certified thresholds per level.

    ``b_continue`` is the last grid point of the certified run starting at 0
    and ``b_stop`` the first point of the certified run ending at ``mu_max``,
    so the reported Indeterminate band can only over-cover.  ``b_stop`` is
    ``inf`` while no Stop point is certified.
    """
    mu = grid.mu_grid
    out = []
    stop_all = grid.lower >= grid.rho0 - eps_eq * np.maximum(1.0, grid.rho0)
    cont_all = grid.upper < grid.rho0 - eps_eq
    for k, tau in enumerate(grid.tau_ladder):
        stop, cont = stop_all[k], cont_all[k]
        if np.any(stop & cont):
            raise ExtractionError(_dump(grid, k, "a point is certified both Stop and Continue"))
        n_cont = int(np.argmin(cont)) if not cont.all() else len(mu)
        if cont[n_cont:].any():
            raise ExtractionError(_dump(grid, k, "Continue points are not contiguous from 0"))
        if stop[-1]:
            first_stop = len(mu) - int(np.argmin(stop[::-1])) if not stop.all() else 0
        else:
            first_stop = len(mu)
        if stop[:first_stop].any():
            raise ExtractionError(_dump(grid, k, "Stop points are not contiguous to mu_max"))
        b_continue = float(mu[n_cont - 1]) if n_cont >= 1 else 0.0
        b_stop = float(mu[first_stop]) if first_stop < len(mu) else math.inf
        out.append(RegionBounds(float(tau), b_continue, b_stop, ITERATED))
    return out


def _dump(grid: RiskGrid, k: int, why: str) -> str:
    return (
        f"{why} at level {k} (tau={grid.tau_ladder[k]:.6g}, sweep {grid.sweep_count}); "
        f"grid step {grid.step:.4g}, mu_max {grid.mu_grid[-1]:.6g}; "
        "check grid resolution, mu_max and quadrature order"
    )


def qb_converged(bounds: list[RegionBounds], config: ProblemConfig) -> bool:
    """True when no Indeterminate interval can hold the whole credal segment.

    At level ``tau`` the segment has width ``delta * tau0 / tau``; every
    connected Indeterminate interval has to be strictly narrower (or empty).
    """
    for b in bounds:
        width = b.indeterminate_width()
        if width == 0.0:
            continue
        if not width < config.delta * config.tau0 / b.tau_level:
            return False
    return True


def band_converged(bounds: list[RegionBounds], tol: float) -> bool:
    """Single-prior criterion: every Indeterminate interval narrower than ``tol``."""
    return all(b.indeterminate_width() == 0.0 or b.indeterminate_width() < tol for b in bounds)


def _solver_meta(settings: SolverSettings, grid: RiskGrid | None, n_levels: int) -> dict:
    meta = {
        "grid_points": settings.grid_points,
        "quadrature": "split-gauss-legendre",
        "quad_order": settings.quad_order,
        "quad_span": settings.quad_span,
        "k_max": settings.k_max,
        "max_sweeps": settings.max_sweeps,
        "eps_eq": settings.eps_eq,
        "ladder_levels": n_levels,
    }
    if grid is not None:
        meta["mu_max"] = float(grid.mu_grid[-1])
        meta["grid_step"] = grid.step
    return meta


def closed_form_plan(config: ProblemConfig, settings: SolverSettings | None = None,
                     lump: int = 1) -> Plan:
    settings = settings or SolverSettings()
    n_levels = min(ladder_levels(config), settings.k_max + 1)
    levels = tuple(
        closed_form_regions(config.c, config.r, config.tau0 + k * config.r)
        for k in range(n_levels)
    )
    return Plan(config, levels, sweeps=0, lump=lump,
                solver={"method": "closed_form", "ladder_levels": n_levels})


def solve(config: ProblemConfig, settings: SolverSettings | None = None, *,
          lump: int = 1, band_tol: float | None = None, keep_history: bool = False):
    """Plan for ``config``: closed form when licensed, value iteration otherwise.

    With ``band_tol`` the closed-form shortcut is skipped and sweeps continue
    until every Indeterminate interval is narrower than ``band_tol`` (the
    single-prior agent's target).  ``keep_history=True`` returns
    ``(plan, [grid_0, grid_1, ...])``.
    """
    settings = settings or SolverSettings()
    if band_tol is None and theorem1_condition(config.c, config.r, config.tau0, config.delta):
        plan = closed_form_plan(config, settings, lump)
        return (plan, []) if keep_history else plan

    n_levels = ladder_levels(config)
    if n_levels - 1 > settings.k_max:
        raise SolveError(
            "ladder",
            f"ladder needs {n_levels - 1} steps to reach tau={tau_double_prime(config.c):.6g},"
            f" above k_max={settings.k_max}",
        )
    grid = init_bounds(config, settings, n_levels)
    history = [grid] if keep_history else None
    bounds = None
    for _ in range(settings.max_sweeps):
        grid = sweep(grid, config)
        if keep_history:
            history.append(grid)
        bounds = extract_regions(grid, settings.eps_eq)
        done = band_converged(bounds, band_tol) if band_tol is not None \
            else qb_converged(bounds, config)
        if done:
            if bounds[-1].b_stop != 0.0:
                raise SolveError("numeric", "top ladder level is not certified Stop everywhere",
                                 bounds, grid.sweep_count)
            plan = Plan(config, tuple(bounds), sweeps=grid.sweep_count, lump=lump,
                        solver={"method": "value_iteration",
                                **_solver_meta(settings, grid, n_levels)})
            return (plan, history) if keep_history else plan
    raise SolveError("sweeps", f"not converged after {settings.max_sweeps} sweeps",
                     bounds, grid.sweep_count)
