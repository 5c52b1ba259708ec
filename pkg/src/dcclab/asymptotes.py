"""High-SINR asymptotes R = slope * gamma_bar_dB + intercept of the average DCC.

Every case shares the slope log2(10)/10 bpcu per dB; only intercepts differ.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import CognitionCase
from .errors import ContractError, DomainError, ParameterError
from .special import LOG2E, digamma, lambert_w0_log, lambert_wm1_log, ln_beta

SLOPE = math.log2(10.0) / 10.0


@dataclass(frozen=True)
class Asymptote:
    """Line in (gamma_bar dB, bpcu)."""

    slope: float
    intercept: float
    details: dict = field(default_factory=dict, compare=False)

    def value(self, gamma_bar_db):
        return self.slope * np.asarray(gamma_bar_db, dtype=float) + self.intercept


def _check_shape(*shapes):
    for m in shapes:
        if not m >= 0.5:
            raise DomainError(f"shape parameters must be >= 0.5, got {m}")


def g_pm(m_i, qos):
    """(G+, G-): the linearized sigmoid edges relative to the operating point."""
    g = LOG2E * math.sqrt(math.pi / (4.0 * m_i * qos.n))
    if not g < 1.0:
        raise ParameterError(f"blocklength n={qos.n} too short for m_i={m_i}: G- <= 0")
    return 1.0 + g, 1.0 - g


def asymptote_ii(m0, m_i, qos):
    """Instantaneous signal and EIP."""
    _check_shape(m0, m_i)
    b = LOG2E * (digamma(m0) - digamma(m_i) + math.log(m_i / m0)
                 - qos.qinv / math.sqrt(2.0 * m_i * qos.n))
    return Asymptote(SLOPE, b)


def c4_intercept(m_i, qos):
    """Intercept for a constant signal with gamma EIP of shape m_i.

    The root phi of phi^(m_i-1) e^(-phi) = A on the upper branch is
    phi = -(m_i - 1) W(-A^(1/(m_i-1)) / (m_i-1)), with W_-1 for m_i > 1 and
    W_0 for m_i < 1; the intercept is log2(m_i / (G+ phi)).
    """
    _check_shape(m_i)
    gp, gm = g_pm(m_i, qos)
    eps = qos.eps_req
    if abs(m_i - 1.0) < 1e-12:
        inner = math.log(gp) - math.log(gm) - math.log(eps)
        return -math.log2(gp) - math.log2(inner), {"branch": "m_i=1"}
    k = m_i - 1.0
    ln_a = math.log(eps) + math.lgamma(m_i) + math.log(gm) - math.log(gp)
    ln_arg = ln_a / k - math.log(abs(k))
    if k > 0:
        if ln_arg > -1.0:
            raise DomainError(f"Lambert W argument below -1/e (m_i={m_i}, eps={eps})")
        w = lambert_wm1_log(ln_arg)
        branch = "W-1"
    else:
        w = lambert_w0_log(ln_arg)
        branch = "W0"
    phi = -k * w
    b = math.log2(m_i) - math.log2(gp) - math.log2(phi)
    return b, {"branch": branch, "log_abs_argument": ln_arg, "w": w, "phi": phi}


def asymptote_const_signal(m_i, qos):
    """Known constant signal power, EIP gamma with shape m_i."""
    b, details = c4_intercept(m_i, qos)
    return Asymptote(SLOPE, b, details)


def asymptote_id(m0, m_i, qos):
    """Instantaneous signal (averaged over its gamma law), statistical EIP."""
    _check_shape(m0)
    b, details = c4_intercept(m_i, qos)
    shift = digamma(m0) * LOG2E - math.log2(m0)
    return Asymptote(SLOPE, shift + b, dict(details, signal_shift=shift))


def c5_intercept(m0, m_i, qos):
    """Fixed-rate intercept with gamma signal and gamma EIP."""
    _check_shape(m0, m_i)
    gp, gm = g_pm(m_i, qos)
    s_term = gp ** (m0 + 1.0) - gm ** (m0 + 1.0)
    ln_inner = (math.log(qos.eps_req) + math.log(m0 * (m0 + 1.0)) + ln_beta(m0, m_i)
                + 0.5 * math.log(math.pi) - math.log(s_term)
                - 0.5 * math.log(m_i * qos.n) - math.log(math.log(2.0)))
    return math.log2(m_i / m0) + ln_inner * LOG2E / m0


def asymptote_dd(m0, m_i, qos):
    """Statistical signal and EIP with a single fixed rate."""
    return Asymptote(SLOPE, c5_intercept(m0, m_i, qos))


def asymptote_for_case(case, m0, m_i, qos):
    """Asymptote for a cognition case, or None for level M."""
    if isinstance(case, str):
        case = CognitionCase.parse(case)
    level_mi = 0.5 if case.interference == "A" else m_i
    key = (case.signal, case.interference)
    if key == ("I", "I"):
        return asymptote_ii(m0, m_i, qos)
    if case.interference == "M":
        return None
    if case.signal == "I":
        return asymptote_id(m0, level_mi, qos)
    return asymptote_dd(m0, level_mi, qos)


def sinr_gap(case_asymptote, ideal_asymptote):
    """Extra mean SINR (dB) a case needs to match the ideal asymptote."""
    if abs(case_asymptote.slope - ideal_asymptote.slope) > 1e-9:
        raise ContractError("asymptotes with different slopes have no constant gap")
    return (ideal_asymptote.intercept - case_asymptote.intercept) / ideal_asymptote.slope


def fit_line(gamma_bar_db, rates):
    """Least-squares (slope, intercept) of rate against gamma_bar in dB."""
    slope, intercept = np.polyfit(np.asarray(gamma_bar_db, float), np.asarray(rates, float), 1)
    return float(slope), float(intercept)
