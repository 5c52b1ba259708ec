"""Fading links, equivalent-interference power (EIP) models and projected SINR laws.

Powers are gamma distributed: a Nakagami-m amplitude with mean power omega
gives a power draw from Gamma(m, omega / m). Projected SINR laws are
immutable value objects with ``cdf``, ``sf``, ``pdf`` and ``sample`` methods.
Their densities are also available in the log-SINR variable u = ln x, which
is what the integrators in :mod:`dcclab.engine` work with.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import CaseError, ContractError, DegenerateInputError, DomainError, SizeError
from .special import inc_beta_pair, ln_beta, reg_lower_gamma, reg_upper_gamma

DEFAULT_MIXTURE_CAP = 10_000
# tail mass left outside the integration window on each side
WINDOW_TAIL = 1e-32
SIGNAL_LEVELS = ("I", "D")
INTERFERENCE_LEVELS = ("I", "D", "A", "M")


@dataclass(frozen=True)
class FadingLink:
    """One radio link: mean received power ``omega`` (W) and gamma shape ``m``."""

    omega: float
    m: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"link power must be positive, got {self.omega}")
        if not self.m >= 0.5:
            raise DomainError(f"Nakagami shape must be >= 0.5, got {self.m}")


@dataclass(frozen=True)
class EipParams:
    """Gamma model of the noise-plus-interference power."""

    m_i: float
    omega_i: float
    xi: float

    def __post_init__(self):
        if not self.m_i >= 0.5 - 1e-12:
            raise DomainError(f"EIP shape must be >= 0.5, got {self.m_i}")
        if not self.omega_i > 0:
            raise DomainError(f"EIP mean must be positive, got {self.omega_i}")
        if not self.xi >= 1:
            raise DomainError(f"xi must be >= 1, got {self.xi}")

    def as_level_a(self):
        """Same mean, Gaussian composite noise (m = 0.5, xi = 3)."""
        return EipParams(0.5, self.omega_i, 3.0)


@dataclass(frozen=True)
class EipMixture:
    """Equal-weight gamma mixture over combinations of active interferers."""

    weights: tuple
    components: tuple
    combos: tuple = ()

    def __post_init__(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise ContractError("mixture needs one weight per component")
        _check_weights(self.weights)

    @property
    def mean_omega(self):
        return math.fsum(w * c.omega_i for w, c in zip(self.weights, self.components))


def _check_weights(weights):
    if any(not w > 0 for w in weights):
        raise DomainError("mixture weights must be positive")
    if abs(math.fsum(weights) - 1.0) > 1e-12:
        raise DomainError(f"mixture weights must sum to 1, got {math.fsum(weights)!r}")


@dataclass(frozen=True)
class CognitionCase:
    """Signal and interference cognition levels, e.g. ``CognitionCase.parse("I/D")``."""

    signal: str
    interference: str

    def __post_init__(self):
        if self.signal not in SIGNAL_LEVELS or self.interference not in INTERFERENCE_LEVELS:
            raise CaseError(f"unknown cognition case {self.signal}/{self.interference}")
        if self.signal == "D" and self.interference == "I":
            raise CaseError("the D/I case is not supported: a statistical signal with "
                            "instantaneous interference has no projection")

    @classmethod
    def parse(cls, text):
        parts = text.strip().upper().split("/")
        if len(parts) != 2:
            raise CaseError(f"cognition case must look like 'I/D', got {text!r}")
        return cls(parts[0], parts[1])

    def __str__(self):
        return f"{self.signal}/{self.interference}"


ALL_CASES = tuple(CognitionCase.parse(c) for c in ("I/I", "I/D", "I/A", "I/M", "D/D", "D/A", "D/M"))


# ---------------------------------------------------------------------------
# EIP construction
# ---------------------------------------------------------------------------

def aggregate_eip(links, noise_power):
    """Moment-matched gamma model of noise plus the sum of interferer powers.

    Noise enters as a gamma component with shape 0.5 and mean ``noise_power``.
    """
    links = list(links)
    if noise_power < 0:
        raise DomainError(f"noise power must be >= 0, got {noise_power}")
    if not links and noise_power == 0:
        raise DegenerateInputError("no interferers and zero noise: EIP undefined")
    omega = math.fsum([noise_power] + [l.omega for l in links])
    second = math.fsum([2.0 * noise_power ** 2] + [l.omega ** 2 / l.m for l in links])
    m_i = omega * omega / second
    return EipParams(m_i, omega, 1.0 + 1.0 / m_i)


def level_a_eip(links, noise_power):
    """EIP known only by its mean, modelled as Gaussian composite noise."""
    return aggregate_eip(links, noise_power).as_level_a()


def level_m_mixture(all_interferers, active_count, noise_power, cap=DEFAULT_MIXTURE_CAP):
    """One EIP component per equally likely active-interferer combination."""
    all_interferers = list(all_interferers)
    n = len(all_interferers)
    if not 1 <= active_count <= n:
        raise ContractError(f"active_count must lie in [1, {n}], got {active_count}")
    k = math.comb(n, active_count)
    if k > cap:
        raise SizeError(f"level-M mixture needs {k} components, above the cap of {cap}; "
                        "raise it with --mixture-cap")
    combos = tuple(itertools.combinations(range(n), active_count))
    comps = tuple(aggregate_eip([all_interferers[i] for i in c], noise_power) for c in combos)
    return EipMixture(tuple([1.0 / k] * k), comps, combos)


# ---------------------------------------------------------------------------
# Projected SINR laws
# ---------------------------------------------------------------------------

def _as_array(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("SINR must be non-negative")
    return x


def _ret(value, x):
    return float(value) if np.ndim(x) == 0 else value


class _Continuous:
    """Shared helpers for laws with a density on (0, inf)."""

    def parts(self):
        return ((1.0, self),)

    def pdf(self, x):
        x = _as_array(x)
        with np.errstate(divide="ignore"):
            u = np.log(x)
        out = np.zeros(x.shape)
        pos = x > 0
        out[pos] = self.u_density(u[pos]) / x[pos]
        return _ret(out, x)

    def cdf_u(self, u):
        return self.cdf(np.exp(u))

    def sf_u(self, u):
        return self.sf(np.exp(u))

    @cached_property
    def window(self):
        """(lo, hi) in u = ln x outside of which each tail holds < WINDOW_TAIL."""
        centre = self.mode_u
        lo = _tail_edge(lambda u: self.cdf_u(u), centre, -1.0)
        hi = _tail_edge(lambda u: self.sf_u(u), centre, 1.0)
        return lo, hi

    def breakpoints(self):
        return (self.mode_u,)

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile needs p in (0, 1), got {p}")
        lo, hi = self.window
        lo -= 10.0
        hi += 10.0
        if p <= 0.5:
            g = lambda u: math.log(max(self.cdf_u(u), 1e-320)) - math.log(p)
        else:
            g = lambda u: math.log1p(-p) - math.log(max(self.sf_u(u), 1e-320))
        return math.exp(brentq(g, lo, hi, xtol=1e-13, rtol=1e-14))


def _tail_edge(tail, start, direction):
    # walk outward until the tail mass drops below WINDOW_TAIL, then bisect
    step = 1.0
    inner = start
    outer = start + direction * step
    while float(tail(outer)) > WINDOW_TAIL:
        inner = outer
        step *= 2.0
        outer = start + direction * step
        if step > 1e4:
            return outer
    lt = math.log(WINDOW_TAIL)
    g = lambda u: math.log(max(float(tail(u)), 1e-320)) - lt
    return brentq(g, min(inner, outer), max(inner, outer), xtol=1e-6)


@lru_cache(maxsize=256)
def _log_gamma_window(shape):
    # window of ln Y for Y ~ Gamma(shape, 1); inverse-gamma laws mirror it
    centre = math.log(shape)
    lo = _tail_edge(lambda v: reg_lower_gamma(shape, math.exp(v)), centre, -1.0)
    hi = _tail_edge(lambda v: reg_upper_gamma(shape, math.exp(v)), centre, 1.0)
    return lo, hi


@dataclass(frozen=True)
class Deterministic:
    """Point mass at ``gamma``; ``xi`` is the fourth moment used in the dispersion."""

    gamma: float
    xi: float = 3.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"SINR must be >= 0, got {self.gamma}")

    def parts(self):
        return ((1.0, self),)

    def cdf(self, x):
        x = _as_array(x)
        return _ret((x >= self.gamma).astype(float), x)

    def sf(self, x):
        x = _as_array(x)
        return _ret((x < self.gamma).astype(float), x)

    def pdf(self, x):
        x = _as_array(x)
        return _ret(np.where(x == self.gamma, np.inf, 0.0), x)

    def quantile(self, p):
        return self.gamma

    def sample(self, rng, size=None):
        return self.gamma if size is None else np.full(size, self.gamma)


@dataclass(frozen=True)
class InverseGamma(_Continuous):
    """SINR = scale / Y with Y ~ Gamma(shape, 1)."""

    shape: float
    scale: float
    xi: float = None

    def __post_init__(self):
        if not self.shape >= 0.5 - 1e-12:
            raise DomainError(f"shape must be >= 0.5, got {self.shape}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.xi is None:
            object.__setattr__(self, "xi", 1.0 + 1.0 / self.shape)

    @property
    def mode_u(self):
        return math.log(self.scale) - math.log(self.shape)

    def cdf(self, x):
        x = _as_array(x)
        with np.errstate(divide="ignore"):
            arg = np.where(x > 0, self.scale / np.where(x > 0, x, 1.0), np.inf)
        return _ret(reg_upper_gamma(self.shape, arg), x)

    def sf(self, x):
        x = _as_array(x)
        with np.errstate(divide="ignore"):
            arg = np.where(x > 0, self.scale / np.where(x > 0, x, 1.0), np.inf)
        return _ret(reg_lower_gamma(self.shape, arg), x)

    @property
    def window(self):
        lo, hi = _log_gamma_window(self.shape)
        ln_s = math.log(self.scale)
        return ln_s - hi, ln_s - lo

    def u_density(self, u):
        t = math.log(self.scale) - np.asarray(u, dtype=float)
        return np.exp(self.shape * t - np.exp(t) - math.lgamma(self.shape))

    def sample(self, rng, size=None):
        return self.scale / rng.gamma(self.shape, 1.0, size)


@dataclass(frozen=True)
class ScaledF(_Continuous):
    """SINR = gamma_bar * G0 / GI with unit-mean gammas of shapes m0 and m_i."""

    m0: float
    m_i: float
    gamma_bar: float
    xi: float = None

    def __post_init__(self):
        if not (self.m0 >= 0.5 and self.m_i >= 0.5 - 1e-12):
            raise DomainError(f"shapes must be >= 0.5, got ({self.m0}, {self.m_i})")
        if not self.gamma_bar > 0:
            raise DomainError(f"gamma_bar must be positive, got {self.gamma_bar}")
        if self.xi is None:
            object.__setattr__(self, "xi", 1.0 + 1.0 / self.m_i)

    @property
    def mode_u(self):
        return math.log(self.gamma_bar)

    @property
    def _pivot_u(self):
        # where m0 f = m_i, the logistic centre of the log-density
        return math.log(self.gamma_bar) + math.log(self.m_i / self.m0)

    def _beta_args(self, x):
        r = self.m0 * x / (self.m_i * self.gamma_bar)
        return r / (1.0 + r), 1.0 / (1.0 + r)

    def cdf(self, x):
        x = _as_array(x)
        t, tc = self._beta_args(x)
        return _ret(inc_beta_pair(self.m0, self.m_i, t, tc)[0], x)

    def sf(self, x):
        x = _as_array(x)
        t, tc = self._beta_args(x)
        return _ret(inc_beta_pair(self.m0, self.m_i, t, tc)[1], x)

    def u_density(self, u):
        v = np.asarray(u, dtype=float) - self._pivot_u
        return np.exp(-self.m0 * np.logaddexp(0.0, -v) - self.m_i * np.logaddexp(0.0, v)
                      - ln_beta(self.m0, self.m_i))

    def sample(self, rng, size=None):
        g0 = rng.gamma(self.m0, 1.0 / self.m0, size)
        gi = rng.gamma(self.m_i, 1.0 / self.m_i, size)
        return self.gamma_bar * g0 / gi


@dataclass(frozen=True)
class _Mixture:
    weights: tuple
    components: tuple
    _kind = None

    def __post_init__(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise ContractError("mixture needs one weight per component")
        _check_weights(self.weights)
        if any(not isinstance(c, self._kind) for c in self.components):
            raise ContractError(f"mixture components must be {self._kind.__name__}")

    def parts(self):
        return tuple(zip(self.weights, self.components))

    def _sum(self, method, x):
        x = _as_array(x)
        total = sum(w * getattr(c, method)(x) for w, c in self.parts())
        return _ret(total, x)

    def cdf(self, x):
        return self._sum("cdf", x)

    def sf(self, x):
        return self._sum("sf", x)

    def pdf(self, x):
        return self._sum("pdf", x)

    def cdf_u(self, u):
        return self.cdf(np.exp(u))

    def sf_u(self, u):
        return self.sf(np.exp(u))

    @cached_property
    def window(self):
        los, his = zip(*(c.window for c in self.components))
        return min(los), max(his)

    def quantile(self, p):
        return _Continuous.quantile(self, p)

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        pick = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
        out = np.empty(n)
        for k, comp in enumerate(self.components):
            sel = pick == k
            if np.any(sel):
                out[sel] = comp.sample(rng, int(sel.sum()))
        return float(out[0]) if size is None else out.reshape(size)


@dataclass(frozen=True)
class MixtureInverseGamma(_Mixture):
    """Weighted mixture of InverseGamma laws (signal instantaneous, level M)."""

    _kind = InverseGamma


@dataclass(frozen=True)
class MixtureScaledF(_Mixture):
    """Weighted mixture of ScaledF laws (signal statistical, level M)."""

    _kind = ScaledF


def sinr_cdf(model, x):
    """CDF of a projected SINR law."""
    return model.cdf(x)


def sinr_pdf(model, x):
    """Density of a projected SINR law."""
    return model.pdf(x)


def project_sinr(case, signal, eip, instantaneous_signal=None, instantaneous_eip=None):
    """Projected SINR law for a cognition case.

    ``eip`` is an :class:`EipParams` for levels I, D and A (level A keeps only
    its mean) and an :class:`EipMixture` for level M.
    """
    if isinstance(case, str):
        case = CognitionCase.parse(case)
    sig_inst = case.signal == "I"
    int_inst = case.interference == "I"
    if sig_inst != (instantaneous_signal is not None):
        raise ContractError("instantaneous signal power must be given exactly when the signal level is I")
    if int_inst != (instantaneous_eip is not None):
        raise ContractError("instantaneous EIP must be given exactly when the interference level is I")
    if case.interference == "M":
        if not isinstance(eip, EipMixture):
            raise ContractError("level M needs an EipMixture")
    elif not isinstance(eip, EipParams):
        raise ContractError(f"level {case.interference} needs EipParams")
    if case.interference == "A":
        eip = eip.as_level_a()

    if int_inst:
        if instantaneous_eip <= 0:
            raise DomainError("instantaneous EIP must be positive")
        return Deterministic(instantaneous_signal / instantaneous_eip, eip.xi)
    if sig_inst:
        s = instantaneous_signal
        if case.interference == "M":
            comps = tuple(InverseGamma(c.m_i, s * c.m_i / c.omega_i, c.xi) for c in eip.components)
            return MixtureInverseGamma(eip.weights, comps)
        return InverseGamma(eip.m_i, s * eip.m_i / eip.omega_i, eip.xi)
    if case.interference == "M":
        comps = tuple(ScaledF(signal.m, c.m_i, signal.omega / c.omega_i, c.xi) for c in eip.components)
        return MixtureScaledF(eip.weights, comps)
    return ScaledF(signal.m, eip.m_i, signal.omega / eip.omega_i, eip.xi)


def sample_gamma_power(m, omega, rng, size=None):
    """Gamma(m, omega/m) power draws (numpy's squeeze/rejection sampler)."""
    if not m >= 0.5:
        raise DomainError(f"shape must be >= 0.5, got {m}")
    if not omega > 0:
        raise DomainError(f"mean power must be positive, got {omega}")
    return rng.gamma(m, omega / m, size)
