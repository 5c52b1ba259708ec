"""Finite-blocklength normal approximation: rate, BLER and channel dispersion."""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .special import LOG2E, inv_q, q_func

LOG2E_SQ = LOG2E * LOG2E


@dataclass(frozen=True)
class QosSpec:
    """Blocklength ``n`` (channel uses) and target block error rate ``eps_req``."""

    n: int
    eps_req: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"blocklength must be a positive integer, got {self.n}")
        if not 0.0 < self.eps_req < 0.5 + 1e-15:
            raise DomainError(f"eps_req must lie in (0, 0.5), got {self.eps_req}")

    @cached_property
    def qinv(self):
        return inv_q(self.eps_req)

    @property
    def penalty(self):
        """Q^{-1}(eps) / sqrt(n), the multiplier of sqrt(V)."""
        return self.qinv / math.sqrt(self.n)


def _scalar_or_array(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("SINR must be non-negative")
    return g


def _ret(value, ref):
    return float(value) if np.ndim(ref) == 0 else value


def dispersion_ngn(xi, gamma):
    """Dispersion (bits^2) with composite noise of normalized fourth moment ``xi``."""
    if not np.all(np.asarray(xi) >= 1):
        raise DomainError(f"xi must be >= 1, got {xi}")
    g = _scalar_or_array(gamma)
    v = LOG2E_SQ * ((xi - 1.0) * g * g + 4.0 * g) / (2.0 * (g + 1.0) ** 2)
    return _ret(v, gamma)


def dispersion_awgn(gamma):
    """Dispersion (bits^2) of the Gaussian-noise channel."""
    g = _scalar_or_array(gamma)
    # g(g+2)/(g+1)^2 rather than 1 - 1/(1+g)^2, which cancels at small g
    return _ret(LOG2E_SQ * (g / (g + 1.0)) * ((g + 2.0) / (g + 1.0)), gamma)


def dispersion_limit(xi):
    """High-SINR limit of :func:`dispersion_ngn`."""
    return LOG2E_SQ * (xi - 1.0) / 2.0


def inst_rate(gamma, qos, xi):
    """Rate meeting ``qos.eps_req`` at a known SINR; may be negative."""
    g = _scalar_or_array(gamma)
    v = dispersion_ngn(xi, g)
    r = np.log1p(g) * LOG2E - np.sqrt(v) * qos.penalty
    return _ret(r, gamma)


def inst_bler(gamma, rate, n, xi):
    """Block error probability at SINR ``gamma`` and rate ``rate``."""
    g = _scalar_or_array(gamma)
    v = np.asarray(dispersion_ngn(xi, g))
    cap = np.log1p(g) * LOG2E
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(n / v) * (cap - rate)
    # V = 0 only at gamma = 0: certain error for a positive rate
    arg = np.where(v > 0, arg, np.where(rate > cap, -np.inf, np.where(rate < cap, np.inf, 0.0)))
    return _ret(q_func(arg), gamma if np.ndim(rate) == 0 else rate)
