import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from dcclab import (ALL_CASES, CognitionCase, Deterministic, EipMixture, EipParams, FadingLink,
                    InverseGamma, MixtureInverseGamma, MixtureScaledF, ScaledF, aggregate_eip,
                    level_a_eip, level_m_mixture, project_sinr, sample_gamma_power, sinr_cdf,
                    sinr_pdf)
from dcclab.errors import CaseError, ContractError, DegenerateInputError, DomainError, SizeError

links_st = st.lists(st.builds(FadingLink, st.floats(1e-3, 1e3), st.floats(0.5, 10.0)),
                    min_size=1, max_size=8)


# ---------------------------------------------------------------------------
# EIP construction
# ---------------------------------------------------------------------------

def test_single_link_collapse():
    eip = aggregate_eip([FadingLink(1.0, 2.0)], 0.0)
    assert (eip.m_i, eip.omega_i) == (2.0, 1.0)
    assert eip.xi == 1.5


def test_noise_only_is_gaussian():
    eip = aggregate_eip([], 1.0)
    assert (eip.m_i, eip.omega_i, eip.xi) == (0.5, 1.0, 3.0)


def test_empty_without_noise_is_degenerate():
    with pytest.raises(DegenerateInputError):
        aggregate_eip([], 0.0)
    with pytest.raises(DomainError):
        aggregate_eip([FadingLink(1.0, 1.0)], -1.0)


def test_level_a_values():
    two = [FadingLink(1.0, 2.0), FadingLink(1.0, 2.0)]
    assert level_a_eip(two, 0.0) == EipParams(0.5, 2.0, 3.0)
    assert level_a_eip([], 1.0) == EipParams(0.5, 1.0, 3.0)
    ten = level_a_eip([FadingLink(0.1, 2.0)] * 10, 0.0)
    assert (ten.m_i, ten.xi) == (0.5, 3.0)
    assert ten.omega_i == pytest.approx(1.0, rel=1e-15)


@given(links_st, st.floats(0.0, 10.0))
def test_mean_preserved_at_every_level(links, noise):
    total = math.fsum([noise] + [l.omega for l in links])
    assert aggregate_eip(links, noise).omega_i == total
    assert level_a_eip(links, noise).omega_i == total


@given(links_st, st.floats(0.0, 10.0))
def test_xi_consistency(links, noise):
    eip = aggregate_eip(links, noise)
    assert eip.xi == 1.0 + 1.0 / eip.m_i
    assert eip.as_level_a().xi == 3.0


def test_mixture_sizes():
    two = [FadingLink(1.0, 1.0), FadingLink(2.0, 1.0)]
    mix = level_m_mixture(two, 1, 0.0)
    assert len(mix.components) == 2 and mix.weights == (0.5, 0.5)
    four = [FadingLink(float(i + 1), 2.0) for i in range(4)]
    assert len(level_m_mixture(four, 2, 0.0).components) == 6


def test_mixture_cap():
    many = [FadingLink(1.0, 1.0)] * 20
    with pytest.raises(SizeError, match="--mixture-cap"):
        level_m_mixture(many, 10, 0.0)
    assert len(level_m_mixture(many, 2, 0.0, cap=190).components) == 190
    with pytest.raises(ContractError):
        level_m_mixture(many[:3], 4, 0.0)


# ---------------------------------------------------------------------------
# cognition cases and projection
# ---------------------------------------------------------------------------

def test_case_parsing():
    assert [str(c) for c in ALL_CASES] == ["I/I", "I/D", "I/A", "I/M", "D/D", "D/A", "D/M"]
    assert CognitionCase.parse(" i/d ") == CognitionCase("I", "D")
    with pytest.raises(CaseError):
        CognitionCase.parse("D/I")
    with pytest.raises(CaseError):
        CognitionCase.parse("X/Y")


def test_projection_per_case():
    signal = FadingLink(10.0, 2.0)
    eip = EipParams(2.0, 1.0, 1.5)
    mix = EipMixture((0.5, 0.5), (eip, EipParams(1.0, 2.0, 2.0)))
    assert project_sinr("I/I", signal, eip, 2.0, 1.0) == Deterministic(2.0, 1.5)
    assert project_sinr("I/D", signal, eip, 3.0) == InverseGamma(2.0, 6.0, 1.5)
    assert project_sinr("D/D", signal, eip) == ScaledF(2.0, 2.0, 10.0)
    assert project_sinr("D/A", signal, eip) == ScaledF(2.0, 0.5, 10.0, 3.0)
    im = project_sinr("I/M", signal, mix, 3.0)
    assert isinstance(im, MixtureInverseGamma) and len(im.components) == 2
    dm = project_sinr("D/M", signal, mix)
    assert isinstance(dm, MixtureScaledF)
    assert dm.components[1] == ScaledF(2.0, 1.0, 5.0, 2.0)


def test_projection_contracts():
    signal = FadingLink(10.0, 2.0)
    eip = EipParams(2.0, 1.0, 1.5)
    with pytest.raises(ContractError):
        project_sinr("I/D", signal, eip)
    with pytest.raises(ContractError):
        project_sinr("D/D", signal, eip, instantaneous_signal=1.0)
    with pytest.raises(ContractError):
        project_sinr("I/I", signal, eip, 1.0)
    with pytest.raises(CaseError):
        project_sinr("D/I", signal, eip, instantaneous_eip=1.0)


# ---------------------------------------------------------------------------
# CDF / PDF
# ---------------------------------------------------------------------------

MODELS = [
    InverseGamma(1.0, 3.0),
    InverseGamma(0.5, 20.0, 3.0),
    InverseGamma(4.3, 0.7),
    ScaledF(2.0, 2.0, 1.0),
    ScaledF(0.5, 8.0, 100.0),
    ScaledF(6.0, 0.5, 3.0, 3.0),
    MixtureInverseGamma((0.3, 0.7), (InverseGamma(2.0, 5.0), InverseGamma(0.8, 40.0))),
    MixtureScaledF((0.25, 0.25, 0.5), (ScaledF(2.0, 2.0, 10.0), ScaledF(2.0, 4.0, 100.0),
                                       ScaledF(2.0, 1.0, 3.0))),
]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
def test_cdf_limits(model):
    assert sinr_cdf(model, 0.0) == 0.0
    assert sinr_cdf(model, 1e300) == pytest.approx(1.0, abs=1e-12)
    x = np.logspace(-4, 6, 200)
    c = sinr_cdf(model, x)
    assert np.all(np.diff(c) >= -1e-15)
    assert np.allclose(c + model.sf(x), 1.0, atol=1e-14)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
def test_pdf_is_cdf_derivative(model):
    lo, hi = model.quantile(0.02), model.quantile(0.98)
    for x in np.geomspace(lo, hi, 50):
        h = 1e-5 * x
        deriv = (sinr_cdf(model, x + h) - sinr_cdf(model, x - h)) / (2.0 * h)
        assert deriv == pytest.approx(sinr_pdf(model, x), rel=1e-5)


def test_inverse_gamma_unit_shape():
    assert InverseGamma(1.0, 2.5).cdf(2.5) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_mixture_cdf_is_weighted_sum():
    mix = MODELS[-1]
    x = np.logspace(-2, 4, 60)
    direct = sum(w * c.cdf(x) for w, c in zip(mix.weights, mix.components))
    assert np.allclose(mix.cdf(x), direct, rtol=0, atol=1e-15)


def test_deterministic_is_step():
    d = Deterministic(3.0)
    assert d.cdf(2.999) == 0.0 and d.cdf(3.0) == 1.0


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        InverseGamma(1.0, 1.0).cdf(-1.0)


def test_mixture_weights_validated():
    with pytest.raises(DomainError):
        MixtureScaledF((0.5, 0.6), (ScaledF(2, 2, 1), ScaledF(2, 2, 2)))
    with pytest.raises(ContractError):
        MixtureScaledF((1.0,), (InverseGamma(2, 2),))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
def test_sampling_matches_cdf(model):
    n = 100_000
    draws = model.sample(np.random.default_rng(5), n)
    ks = stats.kstest(draws, lambda x: sinr_cdf(model, x)).statistic
    assert ks < 1.63 / math.sqrt(n)  # 1% critical value


def test_gamma_power_mean_and_limits():
    rng = np.random.default_rng(7)
    d = sample_gamma_power(1.5, 3.0, rng, 1_000_000)
    assert d.mean() == pytest.approx(3.0, rel=0.01)
    tight = sample_gamma_power(1e6, 3.0, rng, 10_000)
    assert tight.std() / tight.mean() == pytest.approx(1e-3, rel=0.05)
    expo = sample_gamma_power(1.0, 1.0, rng, 1_000_000)
    p = math.exp(-1.0)
    assert abs(np.mean(expo > 1.0) - p) <= 3.0 * math.sqrt(p * (1 - p) / 1e6)
    with pytest.raises(DomainError):
        sample_gamma_power(0.3, 1.0, rng)


def test_sampling_is_reproducible():
    a = sample_gamma_power(2.0, 1.0, np.random.default_rng(42), 10)
    b = sample_gamma_power(2.0, 1.0, np.random.default_rng(42), 10)
    assert np.array_equal(a, b)
