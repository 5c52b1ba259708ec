"""Average BLER and average DCC for projected SINR laws.

Integrals are taken in the log-SINR variable u = ln x, where every projected
law has exponentially decaying tails. The average-BLER integrand is limited
to the window where the instantaneous BLER sigmoid is neither 0 nor 1 to
binary64 precision; the mass below that window is added from the CDF.
"""

import copy
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .distributions import (
    CognitionCase,
    Deterministic,
    EipMixture,
    EipParams,
    FadingLink,
    InverseGamma,
    MixtureInverseGamma,
    project_sinr,
)
from .errors import AccuracyError, ContractError, DomainError, InfeasibleQosError
from .fbl import LOG2E_SQ, inst_bler, inst_rate
from .quadrature import integrate
from .special import LOG2E, reg_lower_gamma, reg_upper_gamma

# the BLER sigmoid is treated as exactly 0 or 1 beyond this many standard deviations
SIGMOID_SPAN = 12.0
BLER_REL_TOL = 1e-9
DCC_REL_TOL = 1e-11
FIXED_RATE_RESIDUAL = 1e-3


@dataclass(frozen=True)
class Diagnostics:
    iterations: int = 0
    residual: float = 0.0
    truncation_terms: int = 0
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class DccResult:
    """An average rate (bpcu) with the method that produced it."""

    avg_rate: float
    method: str
    diagnostics: Diagnostics = Diagnostics()


def _sqrt_dispersion_u(u, xi):
    # sqrt V(e^u) written in y = 1 / (1 + e^u) so that large u cannot overflow
    y = np.exp(-np.logaddexp(0.0, u))
    one_minus = np.exp(-np.logaddexp(0.0, -u))
    return np.sqrt(LOG2E_SQ * ((xi - 1.0) * one_minus ** 2 + 4.0 * one_minus * y) / 2.0)


def _capacity_u(u):
    return np.logaddexp(0.0, u) * LOG2E


def _continuous_parts(model):
    parts = model.parts()
    if any(isinstance(c, Deterministic) for _, c in parts):
        raise ContractError("deterministic laws are handled in closed form")
    return parts


def _sample_breaks(points, limit=8):
    pts = sorted(set(points))
    if len(pts) <= limit:
        return pts
    idx = np.linspace(0, len(pts) - 1, limit).round().astype(int)
    return [pts[i] for i in idx]


def _window(parts):
    los, his = zip(*(c.window for _, c in parts))
    return min(los), max(his)


# ---------------------------------------------------------------------------
# Average BLER
# ---------------------------------------------------------------------------

def avg_bler(model, rate, qos, rel_tol=BLER_REL_TOL):
    """Mean of the instantaneous BLER over a projected SINR law."""
    if not rate >= 0:
        raise DomainError(f"rate must be >= 0, got {rate}")
    if isinstance(model, Deterministic):
        return inst_bler(model.gamma, rate, qos.n, model.xi)
    parts = _continuous_parts(model)
    xis = np.array([c.xi for _, c in parts])
    vmax = LOG2E_SQ * max(float(xis.max()) - 1.0, 2.0) / 2.0
    delta = SIGMOID_SPAN * math.sqrt(vmax / qos.n)
    ln2 = math.log(2.0)
    lo_w, hi_w = _window(parts)
    hi = min(math.log(math.expm1((rate + delta) * ln2)), hi_w)
    if rate > delta:
        x_lo = math.expm1((rate - delta) * ln2)
        base = math.fsum(w * c.cdf(x_lo) for w, c in parts)
        lo = max(math.log(x_lo), lo_w)
    else:
        base = 0.0
        lo = lo_w
    if hi <= lo:
        return base

    def integrand(u):
        x = np.exp(u)
        total = np.zeros_like(u)
        for w, c in parts:
            total += w * c.u_density(u) * inst_bler(x, rate, qos.n, c.xi)
        return total

    breaks = [b for _, c in parts for b in c.breakpoints()]
    if rate > 0:
        breaks.append(math.log(math.expm1(rate * ln2)))
    try:
        value, _ = integrate(integrand, lo, hi, rel_tol=rel_tol,
                             abs_tol=max(rel_tol * base, 1e-300),
                             breakpoints=_sample_breaks(breaks))
    except AccuracyError as exc:
        raise AccuracyError(f"average BLER quadrature failed: {exc}",
                            estimate=base + (exc.estimate or 0.0)) from exc
    return min(base + value, 1.0)


# ---------------------------------------------------------------------------
# Average DCC with instantaneous rate adaptation
# ---------------------------------------------------------------------------

def avg_dcc_adaptive(model, qos, rel_tol=DCC_REL_TOL):
    """E[log2(1+g)] - Q^{-1}(eps)/sqrt(n) * E[sqrt V(g)] over a projected law."""
    if isinstance(model, Deterministic):
        return DccResult(inst_rate(model.gamma, qos, model.xi), "quadrature")
    parts = _continuous_parts(model)
    lo, hi = _window(parts)
    breaks = _sample_breaks([b for _, c in parts for b in c.breakpoints()])

    def cap(u):
        return sum(w * c.u_density(u) for w, c in parts) * _capacity_u(u)

    def root_v(u):
        return sum(w * c.u_density(u) * _sqrt_dispersion_u(u, c.xi) for w, c in parts)

    e_cap, err1 = integrate(cap, lo, hi, rel_tol=rel_tol, breakpoints=breaks)
    e_rv, err2 = integrate(root_v, lo, hi, rel_tol=rel_tol, breakpoints=breaks)
    value = e_cap - qos.penalty * e_rv
    return DccResult(value, "quadrature",
                     Diagnostics(residual=err1 + qos.penalty * err2,
                                 extra={"mean_capacity": e_cap, "mean_sqrt_dispersion": e_rv}))


# ---------------------------------------------------------------------------
# Fixed-rate allocation
# ---------------------------------------------------------------------------

def solve_fixed_rate(model, qos, rel_tol=BLER_REL_TOL):
    """The rate whose average BLER over ``model`` equals ``qos.eps_req``."""
    eps = qos.eps_req
    if isinstance(model, Deterministic):
        r = inst_rate(model.gamma, qos, model.xi)
        if not r > 0:
            floor = inst_bler(model.gamma, 0.0, qos.n, model.xi)
            raise InfeasibleQosError(f"no positive rate meets eps={eps:g}", floor_bler=floor)
        return DccResult(r, "fixed_rate_solve")
    floor = avg_bler(model, 0.0, qos, rel_tol)
    if floor > eps:
        raise InfeasibleQosError(
            f"BLER floor {floor:.3e} at vanishing rate exceeds eps={eps:g}", floor_bler=floor)
    r_hi = math.log2(1.0 + model.quantile(1.0 - eps / 10.0))
    for _ in range(11):
        if avg_bler(model, r_hi, qos, rel_tol) >= eps:
            break
        r_hi *= 2.0
    else:
        raise AccuracyError("could not bracket the fixed rate", estimate=r_hi)
    log_eps = math.log(eps)

    def h(r):
        return math.log(max(avg_bler(model, r, qos, rel_tol), 1e-320)) - log_eps

    if floor == eps:
        rate, iters = 0.0, 0
    else:
        rate, info = brentq(h, 0.0, r_hi, xtol=1e-12, rtol=1e-13, full_output=True)
        iters = info.iterations
    achieved = avg_bler(model, rate, qos, rel_tol)
    residual = abs(achieved - eps) / eps
    if residual > FIXED_RATE_RESIDUAL:
        raise AccuracyError(f"fixed-rate residual {residual:.2e} above tolerance", estimate=rate)
    return DccResult(rate, "fixed_rate_solve",
                     Diagnostics(iterations=iters, residual=residual, extra={"floor_bler": floor}))


# ---------------------------------------------------------------------------
# Signal known instantaneously, interference statistically
# ---------------------------------------------------------------------------

def _conditional_model(eip, s):
    if isinstance(eip, EipMixture):
        comps = tuple(InverseGamma(c.m_i, s * c.m_i / c.omega_i, c.xi) for c in eip.components)
        return MixtureInverseGamma(eip.weights, comps)
    return InverseGamma(eip.m_i, s * eip.m_i / eip.omega_i, eip.xi)


def _cheb_lobatto(p):
    return -np.cos(np.pi * np.arange(p + 1) / p)


def _bary_weights(p):
    w = (-1.0) ** np.arange(p + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


class SignalRateCurve:
    """Fixed rate R(S) against a known signal power S for a given EIP law.

    R is tabulated in ln S on Chebyshev-Lobatto panels from the feasibility
    threshold S* upward and continued linearly (slope log2 e per neper) once
    the rate exceeds ``linear_from`` bits, where the curve is affine to
    binary64 precision. R(S) = 0 below S* (no transmission).
    """

    def __init__(self, eip, qos, panel_width=2.0, order=10, linear_from=40.0):
        self.eip = eip
        self.qos = qos
        self.order = order
        self._weights = _bary_weights(order)
        self._u_star = self._threshold()
        edges = [self._u_star]
        values = []
        solves = 0
        ref = _cheb_lobatto(order)
        while True:
            a = edges[-1]
            b = a + panel_width
            nodes = a + (ref + 1.0) * 0.5 * (b - a)
            vals = np.empty(order + 1)
            for j, u in enumerate(nodes):
                if j == 0 and values:
                    vals[j] = values[-1][-1]
                    continue
                vals[j] = self._rate_at(u)
                solves += 1
            values.append(vals)
            edges.append(b)
            if vals[-1] >= linear_from:
                break
        self._edges = np.array(edges)
        self.values = np.array(values)
        self.solves = solves
        self.shift = 0.0

    def rescaled(self, factor):
        """The same curve for every EIP power multiplied by ``factor``.

        Only S / EIP enters the inverse-gamma law, so R(S) becomes R(S / factor).
        """
        out = copy.copy(self)
        out.shift = self.shift + math.log(factor)
        return out

    @property
    def edges(self):
        return self._edges + self.shift

    def _rate_at(self, u):
        if u <= self._u_star:
            return 0.0
        try:
            return solve_fixed_rate(_conditional_model(self.eip, math.exp(u)), self.qos).avg_rate
        except InfeasibleQosError:
            return 0.0

    def _threshold(self):
        eps = self.qos.eps_req
        g = lambda u: math.log(max(avg_bler(_conditional_model(self.eip, math.exp(u)), 0.0, self.qos),
                                   1e-320)) - math.log(eps)
        centre = math.log(self._mean_omega())
        lo, hi = centre - 1.0, centre + 1.0
        while g(lo) < 0:
            lo -= 4.0
        while g(hi) > 0:
            hi += 4.0
        return brentq(g, lo, hi, xtol=1e-12, rtol=1e-14)

    def _mean_omega(self):
        if isinstance(self.eip, EipMixture):
            return self.eip.mean_omega
        return self.eip.omega_i

    @property
    def u_star(self):
        return self._u_star + self.shift

    @property
    def threshold(self):
        """Smallest signal power (W) with a feasible positive rate."""
        return math.exp(self.u_star)

    def rate_u(self, u):
        """Vectorized R at u = ln S."""
        u = np.atleast_1d(np.asarray(u, dtype=float)) - self.shift
        out = np.zeros(u.shape)
        edges = self._edges
        last = edges[-1]
        top = u >= last
        out[top] = self.values[-1][-1] + (u[top] - last) * LOG2E
        mid = (u > self._u_star) & ~top
        if np.any(mid):
            um = u[mid]
            k = np.clip(np.searchsorted(edges, um, side="right") - 1, 0, len(self.values) - 1)
            a = edges[k]
            b = edges[k + 1]
            t = 2.0 * (um - a) / (b - a) - 1.0
            ref = _cheb_lobatto(self.order)
            diff = t[:, None] - ref[None, :]
            exact = diff == 0.0
            diff[exact] = 1.0
            coef = self._weights[None, :] / diff
            vals = self.values[k]
            res = (coef * vals).sum(axis=1) / coef.sum(axis=1)
            hit = exact.any(axis=1)
            if np.any(hit):
                res[hit] = vals[hit][exact[hit]]
            out[mid] = res
        return out

    def rate(self, s):
        """Vectorized R at signal power ``s`` (W)."""
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            r = self.rate_u(np.log(s))
        return float(r[0]) if s.ndim == 0 else r.reshape(s.shape)


@lru_cache(maxsize=256)
def _unit_curve(eip, qos):
    return SignalRateCurve(eip, qos)


def signal_rate_curve(eip, qos):
    """:class:`SignalRateCurve` for an EIP law, cached in units of its mean power."""
    if isinstance(eip, EipMixture):
        scale = eip.mean_omega
        unit = EipMixture(eip.weights,
                          tuple(EipParams(c.m_i, c.omega_i / scale, c.xi) for c in eip.components),
                          eip.combos)
    else:
        scale = eip.omega_i
        unit = EipParams(eip.m_i, 1.0, eip.xi)
    return _unit_curve(unit, qos).rescaled(scale)


def _gamma_log_window(m, theta):
    # u = ln S window for S ~ Gamma(m, theta), each tail below 1e-32
    centre = math.log(theta) + math.log(m)

    def edge(tail, direction):
        step = 0.5
        while tail(centre + direction * step) > 1e-32:
            step *= 2.0
        g = lambda u: math.log(max(tail(u), 1e-320)) - math.log(1e-32)
        return brentq(g, centre + direction * step / 2.0 if step > 0.5 else centre,
                      centre + direction * step, xtol=1e-8)

    lo = edge(lambda u: reg_lower_gamma(m, math.exp(u) / theta), -1.0)
    hi = edge(lambda u: reg_upper_gamma(m, math.exp(u) / theta), 1.0)
    return lo, hi


def nested_signal_average(curve, signal, rel_tol=1e-10):
    """E_S[R(S)] for S ~ Gamma(m0, omega0/m0); returns (mean rate, infeasible mass)."""
    m0 = signal.m
    theta = signal.omega / m0
    ln_theta = math.log(theta)
    lg = math.lgamma(m0)
    infeasible = reg_lower_gamma(m0, curve.threshold / theta)
    lo, hi = _gamma_log_window(m0, theta)
    lo = max(lo, curve.u_star)
    if hi <= lo:
        return 0.0, infeasible

    def f(u):
        t = u - ln_theta
        return np.exp(m0 * t - np.exp(t) - lg) * curve.rate_u(u)

    breaks = [e for e in curve.edges if lo < e < hi] + [ln_theta + math.log(m0)]
    value, _ = integrate(f, lo, hi, rel_tol=rel_tol, abs_tol=1e-300, breakpoints=_sample_breaks(breaks, 24))
    return value, infeasible


def avg_dcc_signal_instant(signal, eip, qos, mode="nested_exact"):
    """Average DCC when S is known per block and the EIP only statistically."""
    if mode == "asymptote":
        if not isinstance(eip, EipParams):
            raise ContractError("the asymptote is defined for a single gamma EIP")
        from .asymptotes import asymptote_id

        gbar_db = 10.0 * math.log10(signal.omega / eip.omega_i)
        line = asymptote_id(signal.m, eip.m_i, qos)
        return DccResult(line.value(gbar_db), "asymptote")
    if mode != "nested_exact":
        raise ContractError(f"unknown mode {mode!r}")
    curve = signal_rate_curve(eip, qos)
    value, infeasible = nested_signal_average(curve, signal)
    return DccResult(value, "nested",
                     Diagnostics(iterations=curve.solves, truncation_terms=len(curve.values),
                                 extra={"infeasible_mass": infeasible, "threshold_w": curve.threshold}))


# ---------------------------------------------------------------------------
# Case dispatch
# ---------------------------------------------------------------------------

def projected_rate(case, signal, eip, qos):
    """Projected average DCC for a cognition case.

    ``eip`` is the level-D EipParams of the interference (levels I, D, A) or an
    EipMixture (level M). Infeasible fixed-rate cases raise InfeasibleQosError.
    """
    if isinstance(case, str):
        case = CognitionCase.parse(case)
    if case.interference == "A":
        eip = eip.as_level_a()
    if case.signal == "I" and case.interference == "I":
        model = project_sinr(CognitionCase("D", "D"), signal, eip)
        return avg_dcc_adaptive(model, qos)
    if case.signal == "I":
        return avg_dcc_signal_instant(signal, eip, qos)
    return solve_fixed_rate(project_sinr(case, signal, eip), qos)


def canonical_inputs(m0, m_i, gamma_bar, omega_i=1.0):
    """Signal link and EIP with the given shapes and mean SINR gamma_bar = omega0 / omega_i."""
    eip = EipParams(m_i, omega_i, 1.0 + 1.0 / m_i)
    return FadingLink(gamma_bar * omega_i, m0), eip
