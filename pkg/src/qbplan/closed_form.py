"""Closed-form decision regions and the test that licenses them.

For a task with cost ``c`` and observation precision ``r`` the closed-form
Continue bound at precision ``tau`` is the one-observation indifference point
and the Stop bound is where the immediate-decision risk falls to ``c``.  They
describe the agent completely whenever ``z * omega(z * delta * tau / 2) < c``
for every z between ``tau_double_prime(c) ** -0.5`` and ``tau_prime(c, r) ** -0.5``;
that condition only gets easier as ``c`` grows, which makes the smallest such
cost findable by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import PHI0, _omega, omega, omega_inverse

CLOSED_FORM = "closed_form"
ITERATED = "iterated"

_SCAN_POINTS = 1024
_GOLDEN_TOL = 1e-10
_STRICT_MARGIN = 1e-12


@dataclass(frozen=True)
class CheckInterval:
    z_lo: float
    z_hi: float

    @property
    def empty(self) -> bool:
        return self.z_lo > self.z_hi


@dataclass(frozen=True)
class RegionBounds:
    """Thresholds on ``|mu|`` at one rung of the precision ladder.

    ``|mu| <= b_continue`` is Continue (an empty region when ``b_continue``
    is 0), ``mu >= b_stop`` is Stop1, ``mu <= -b_stop`` is Stop0 and the rest
    is Indeterminate.
    """

    tau_level: float
    b_continue: float
    b_stop: float
    provenance: str

    def __post_init__(self):
        if not (0.0 <= self.b_continue <= self.b_stop):
            raise ValueError(
                f"need 0 <= b_continue <= b_stop, got {self.b_continue}, {self.b_stop}"
            )
        if self.provenance not in (CLOSED_FORM, ITERATED):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def indeterminate_width(self) -> float:
        """Length of the widest connected Indeterminate interval.

        With an empty Continue region the two Indeterminate sides merge into
        ``(-b_stop, b_stop)``.
        """
        if self.b_continue > 0:
            return self.b_stop - self.b_continue
        return 2.0 * self.b_stop

    def label(self, mu: float) -> str:
        if self.b_continue > 0 and abs(mu) <= self.b_continue:
            return "Continue"
        if mu >= self.b_stop:
            return "Stop1"
        if mu <= -self.b_stop:
            return "Stop0"
        return "Indeterminate"


def _positive(**values):
    for name, v in values.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive, got {v}")


def tau_prime(c: float, r: float) -> float:
    """Precision above which one more observation never pays for itself."""
    _positive(c=c, r=r)
    half = 0.5 * r
    return math.sqrt(half * half + half / (math.pi * c * c)) - half


def tau_double_prime(c: float) -> float:
    """Precision above which stopping immediately is optimal everywhere."""
    _positive(c=c)
    return 1.0 / (2.0 * math.pi * c * c)


def check_interval(c: float, r: float) -> CheckInterval:
    return CheckInterval(tau_double_prime(c) ** -0.5, tau_prime(c, r) ** -0.5)


def _max_g(interval: CheckInterval, scale: float) -> float:
    """max of ``z * omega(z * scale)`` on the interval: grid scan, then golden section."""
    g = lambda z: z * _omega(z * scale)  # noqa: E731
    z = np.linspace(interval.z_lo, interval.z_hi, _SCAN_POINTS)
    vals = g(z)
    best = int(np.argmax(vals))
    a = z[max(best - 1, 0)]
    b = z[min(best + 1, len(z) - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = float(g(x1)), float(g(x2))
    while b - a > _GOLDEN_TOL:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = float(g(x2))
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = float(g(x1))
    return max(float(vals[best]), f1, f2, float(g(a)), float(g(b)))


def theorem1_condition(c: float, r: float, tau: float, delta: float) -> bool:
    """True when the closed-form regions fully characterise the plan.

    An empty z-interval (large costs) counts as satisfied.
    """
    _positive(c=c, r=r, tau=tau)
    if not (delta >= 0 and math.isfinite(delta)):
        raise ValueError(f"delta must be non-negative, got {delta}")
    interval = check_interval(c, r)
    if interval.empty:
        return True
    return _max_g(interval, delta * tau / 2.0) < c - _STRICT_MARGIN


def closed_form_regions(c: float, r: float, tau_level: float) -> RegionBounds:
    _positive(c=c, r=r, tau_level=tau_level)
    a = math.sqrt(tau_level * (tau_level + r) / r)
    rt = math.sqrt(tau_level)
    b_continue = omega_inverse(c * a) / a
    b_stop = max(0.0, omega_inverse(c * rt) / rt)
    # both thresholds solve the same monotone equation; guard rounding only
    b_continue = min(b_continue, b_stop)
    return RegionBounds(tau_level, b_continue, b_stop, CLOSED_FORM)


class NoClosedFormCost(ValueError):
    pass


def min_closed_form_cost(r: float, tau: float, delta: float, c_hi: float,
                         tol: float = 1e-5) -> float:
    """Smallest cost (to ``tol``) at which :func:`theorem1_condition` holds.

    The returned value is the upper end of the final bracket, so the
    condition is guaranteed true there.
    """
    if not theorem1_condition(c_hi, r, tau, delta):
        raise NoClosedFormCost("no closed-form cost in range")
    lo, hi = 0.0, float(c_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if theorem1_condition(mid, r, tau, delta):
            hi = mid
        else:
            lo = mid
    return hi


def indifference_cost(mu_prime: float, tau: float, r: float) -> float:
    """Cost at which ``mu_prime`` sits exactly on the Continue boundary at ``tau``."""
    _positive(mu_prime=mu_prime, tau=tau, r=r)
    a = math.sqrt(tau * (tau + r) / r)
    return omega(a * mu_prime) / a


__all__ = [
    "CLOSED_FORM", "ITERATED", "PHI0", "CheckInterval", "RegionBounds",
    "NoClosedFormCost", "tau_prime", "tau_double_prime", "check_interval",
    "theorem1_condition", "closed_form_regions", "min_closed_form_cost",
    "indifference_cost",
]
