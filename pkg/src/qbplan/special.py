"""Standard-Gaussian kernel used by every region boundary.

``omega`` is the linear-loss integral ``phi(s) - s * (1 - Phi(s))`` and
``omega_inverse`` its inverse on ``[0, inf)``.  ``Phi`` is evaluated through
``scipy.special.ndtr`` (absolute error below 1e-15 on the real line), which
leaves the 1e-12 budget almost entirely to the root finder in ``omega_inverse``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

SQRT_2PI = math.sqrt(2.0 * math.pi)
PHI0 = 1.0 / SQRT_2PI

_U_BRACKET = 40.0
_U_TOL = 1e-12


def _check_finite(s):
    if not np.all(np.isfinite(s)):
        raise ValueError(f"non-finite argument: {s!r}")


def std_normal_pdf(s):
    """Standard normal density; accepts scalars or arrays."""
    _check_finite(s)
    s = np.asarray(s, dtype=float)
    out = np.exp(-0.5 * s * s) / SQRT_2PI
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(s):
    """Standard normal distribution function."""
    _check_finite(s)
    out = ndtr(np.asarray(s, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _omega(s):
    # no validation; s >= 0 arrays on the hot path of the value iteration
    return np.exp(-0.5 * s * s) / SQRT_2PI - s * ndtr(-s)


def omega(s):
    """Linear-loss integral ``phi(s) - s*(1 - Phi(s))`` for ``s >= 0``.

    Strictly decreasing from ``phi(0)`` to 0; its derivative is
    ``-(1 - Phi(s))``.
    """
    _check_finite(s)
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ValueError("omega is defined for s >= 0 only")
    out = _omega(arr)
    return float(out) if out.ndim == 0 else out


def omega_inverse(y: float) -> float:
    """Inverse of :func:`omega`.

    Values ``y >= phi(0)`` clamp to 0: no non-negative s reaches them, and a
    threshold equation with such a right-hand side means "stop everywhere".
    """
    y = float(y)
    if not math.isfinite(y) or y <= 0.0:
        raise ValueError(f"omega_inverse needs 0 < y, got {y}")
    if y >= PHI0:
        return 0.0
    lo, hi = 0.0, _U_BRACKET
    s = 1.0
    # safeguarded Newton; omega' = -(1 - Phi) never vanishes inside the bracket
    for _ in range(200):
        f = float(_omega(s)) - y
        if f > 0:
            lo = s
        else:
            hi = s
        deriv = -float(ndtr(-s))
        step_ok = deriv < 0
        nxt = s - f / deriv if step_ok else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - s) <= _U_TOL or hi - lo <= _U_TOL:
            return nxt
        s = nxt
    return s


def stop_risk(mu, tau):
    """Risk of deciding immediately, ``omega(sqrt(tau)|mu|) / sqrt(tau)``."""
    _check_finite(mu)
    tau = float(tau)
    if not math.isfinite(tau) or tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    rt = math.sqrt(tau)
    out = _omega(rt * np.abs(np.asarray(mu, dtype=float))) / rt
    return float(out) if np.ndim(out) == 0 else out
