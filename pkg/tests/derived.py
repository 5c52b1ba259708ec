"""Worked examples whose expected values come from an independent oracle.

Each check is a plain function that raises AssertionError on failure. The
registry ``DERIVED`` is run by test_derived.py and again, as a whole, by the
oracle-equivalence acceptance criterion.
"""

import math

import numpy as np
from scipy import integrate as sp_integrate

from dcclab import (EipParams, FadingLink, InverseGamma, LayoutSpec, MixtureScaledF,
                    PowerSpec, QosSpec, ScaledF, aggregate_eip, asymptote_const_signal,
                    asymptote_dd, asymptote_id, asymptote_ii, avg_bler, avg_dcc_adaptive,
                    avg_dcc_signal_instant, c2_series, dispersion_awgn, dispersion_ngn, generate,
                    inst_bler, inst_rate, level_m_mixture, path_loss_db, project_sinr,
                    sample_gamma_power, sinr_gap, solve_fixed_rate, theorem1_closed_form,
                    tx_power_dbm)
from dcclab import special
from dcclab.asymptotes import fit_line, g_pm
from dcclab.engine import canonical_inputs
from dcclab.scenario import build_experiment, monte_carlo_cases

import oracles

LOG2E = 1.0 / math.log(2.0)
QOS = QosSpec(200, 1e-5)
FIT_WINDOW = np.linspace(70.0, 90.0, 11)


def db(x):
    return 10.0 ** (x / 10.0)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def ln_gamma_stirling():
    ref = oracles.stirling_ln_gamma(7.25)
    assert oracles.rel_err(special.ln_gamma(7.25), ref) <= 1e-13


def digamma_finite_difference():
    h = 1e-6
    fd = (special.ln_gamma(3.7 + h) - special.ln_gamma(3.7 - h)) / (2.0 * h)
    assert abs(special.digamma(3.7) - fd) <= 1e-6


def upper_gamma_quadrature():
    ref = oracles.upper_gamma_quadrature(2.5, 3.1)
    assert abs(special.reg_upper_gamma(2.5, 3.1) - ref) <= 1e-10


def inc_beta_polynomial():
    # I_x(2, 2) = int_0^x 6 t (1 - t) dt
    ref, _ = sp_integrate.quad(lambda t: 6.0 * t * (1.0 - t), 0.0, 0.3, epsabs=1e-15)
    assert abs(ref - 0.216) <= 1e-14
    assert abs(special.reg_inc_beta(2.0, 2.0, 0.3) - ref) <= 1e-14


def gauss_2f1_two_paths():
    # F(3.5, 4; 6.5; -8) = 9^-3.5 F(3.5, 2.5; 6.5; 8/9): the transformed series
    # converges, so 5000 plain terms give an independent reference
    ref = float(9.0 ** -3.5 * oracles.hyp2f1_series(3.5, 2.5, 6.5, 8.0 / 9.0, 5000))
    assert oracles.rel_err(special.gauss_2f1(3.5, 4.0, 6.5, -8.0), ref) <= 1e-9


def lambert_w0_bisection():
    ref = oracles.bisect(lambda w: w * math.exp(w) + 0.2, -1.0, 0.0)
    assert abs(special.lambert_w0(-0.2) - ref) <= 1e-12


def inv_q_bisection():
    ref = oracles.bisect(lambda x: special.q_func(x) - 1e-5, 0.0, 10.0)
    assert abs(special.inv_q(1e-5) - ref) <= 1e-9
    assert abs(special.inv_q(1e-5) - 4.2649) <= 1e-4


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def aggregate_two_links():
    eip = aggregate_eip([FadingLink(1.0, 2.0), FadingLink(1.0, 2.0)], 0.0)
    assert eip.m_i == 4.0 and eip.omega_i == 2.0


def mixture_symmetric_candidates():
    links = [FadingLink(0.3, 1.5)] * 3
    mix = level_m_mixture(links, 2, 0.1)
    pair = aggregate_eip(links[:2], 0.1)
    assert len(mix.components) == 3
    assert all(c == pair for c in mix.components)


def project_level_a_inverse_gamma():
    signal = FadingLink(4.0, 2.0)
    eip = EipParams(2.0, 2.0, 1.5)
    law = project_sinr("I/A", signal, eip, instantaneous_signal=4.0)
    assert isinstance(law, InverseGamma)
    assert (law.shape, law.scale, law.xi) == (0.5, 1.0, 3.0)


def scaled_f_cdf_monte_carlo():
    rng = np.random.default_rng(11)
    n = 1_000_000
    ratio = rng.gamma(2.0, 0.5, n) / rng.gamma(2.0, 0.5, n)
    emp = np.mean(ratio <= 1.0)
    p = ScaledF(2.0, 2.0, 1.0).cdf(1.0)
    assert abs(emp - p) <= 3.0 * math.sqrt(p * (1.0 - p) / n)


def gamma_power_variance():
    draws = sample_gamma_power(2.0, 5.0, np.random.default_rng(12), 1_000_000)
    assert abs(draws.var() / 12.5 - 1.0) <= 0.02


# ---------------------------------------------------------------------------
# finite-blocklength core
# ---------------------------------------------------------------------------

def dispersion_hand_values():
    assert abs(dispersion_ngn(2.0, 1.0) - LOG2E ** 2 * 5.0 / 8.0) <= 1e-15
    assert abs(dispersion_ngn(2.0, 1.0) - 1.300856) <= 1e-6
    assert abs(dispersion_awgn(1.0) - 0.75 * LOG2E ** 2) <= 1e-15


def inst_rate_composition():
    v = dispersion_ngn(3.0, 10.0)
    ref = math.log2(11.0) - math.sqrt(v / 200.0) * special.inv_q(1e-5)
    assert abs(inst_rate(10.0, QOS, 3.0) - ref) <= 1e-14


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

def avg_bler_monte_carlo():
    model = ScaledF(2.0, 2.0, 100.0)
    rng = np.random.default_rng(13)
    n = 10_000_000
    g = model.sample(rng, n)
    b = inst_bler(g, 3.0, 200, model.xi)
    half = 3.0 * b.std() / math.sqrt(n)
    assert abs(avg_bler(model, 3.0, QOS) - b.mean()) <= half


def closed_form_matches_quadrature():
    for m0 in (1.0, 2.0, 4.0):
        for g_db in (0.0, 7.5, 20.0):
            cf = theorem1_closed_form(m0, db(g_db), QOS).avg_rate
            quad = avg_dcc_adaptive(ScaledF(m0, 0.5, db(g_db), 3.0), QOS).avg_rate
            assert abs(cf - quad) <= 1e-4 * abs(quad)


def c2_high_sinr_limit():
    c2, _ = c2_series(2.0, 1e6)
    assert abs(c2 / LOG2E - 1.0) <= 0.01
    # same expectation by quadrature: mean sqrt-dispersion of the scaled-F law
    quad = avg_dcc_adaptive(ScaledF(2.0, 0.5, 1e6, 3.0), QOS).diagnostics.extra["mean_sqrt_dispersion"]
    assert abs(c2 - quad) <= 1e-8 * quad


def fixed_rate_self_consistency():
    model = ScaledF(2.0, 2.0, db(50.0))
    r = solve_fixed_rate(model, QOS).avg_rate
    assert abs(avg_bler(model, r, QOS) / QOS.eps_req - 1.0) <= 1e-3


def mixture_fixed_rate_dominance():
    # component 0 carries a strong interferer; the mixture rate must sit between
    # the rate of that component alone and the rate of every other component
    comps = (ScaledF(2.0, 2.0, db(25.0)), ScaledF(2.0, 2.0, db(45.0)), ScaledF(2.0, 2.0, db(47.0)))
    mix = MixtureScaledF((1 / 3, 1 / 3, 1 / 3), comps)
    r_mix = solve_fixed_rate(mix, QOS).avg_rate
    alone = [solve_fixed_rate(c, QOS).avg_rate for c in comps]
    assert alone[0] <= r_mix < min(alone[1:])
    # and the weak component alone meets 3 eps at the mixture rate
    r_weak3 = solve_fixed_rate(comps[0], QosSpec(200, 3e-5)).avg_rate
    assert r_mix <= r_weak3 + 1e-9


def id_asymptote_shift_m0_one():
    signal, eip = canonical_inputs(1.0, 2.0, db(60.0))
    line = asymptote_const_signal(2.0, QOS)
    res = avg_dcc_signal_instant(signal, eip, QOS, mode="asymptote")
    shift = res.avg_rate - line.value(60.0)
    assert abs(shift - (-0.8327)) <= 5e-5
    assert abs(shift + special.EULER_GAMMA * LOG2E) <= 1e-12


def id_nested_vs_asymptote():
    signal, eip = canonical_inputs(2.0, 2.0, db(50.0))
    nested = avg_dcc_signal_instant(signal, eip, QOS).avg_rate
    asym = avg_dcc_signal_instant(signal, eip, QOS, mode="asymptote").avg_rate
    assert abs(nested - asym) <= 0.15


def ii_intercept_regression():
    grid = np.linspace(60.0, 80.0, 11)
    rates = [avg_dcc_adaptive(ScaledF(2.0, 0.5, db(g)), QOS).avg_rate for g in grid]
    _, intercept = fit_line(grid, rates)
    assert abs(intercept - asymptote_ii(2.0, 0.5, QOS).intercept) <= 0.05


def c4_unit_shape_direct():
    gp, gm = g_pm(1.0, QOS)
    direct = -math.log2(gp) - math.log2(math.log(gp) - math.log(gm) - math.log(1e-5))
    line = asymptote_const_signal(1.0, QOS)
    assert abs(line.intercept - direct) <= 1e-14
    # cross-check: exact fixed rate for a constant signal at 70 dB
    exact = solve_fixed_rate(InverseGamma(1.0, db(70.0)), QOS).avg_rate
    assert abs(exact - line.value(70.0)) <= 0.2


def id_intercept_regression():
    grid = np.linspace(60.0, 80.0, 11)
    rates = []
    for g in grid:
        signal, eip = canonical_inputs(2.0, 2.0, db(g))
        rates.append(avg_dcc_signal_instant(signal, eip, QOS).avg_rate)
    _, intercept = fit_line(grid, rates)
    assert abs(intercept - asymptote_id(2.0, 2.0, QOS).intercept) <= 0.15


def dd_intercept_regression():
    rates = [solve_fixed_rate(ScaledF(2.0, 2.0, db(g)), QOS).avg_rate for g in FIT_WINDOW]
    _, intercept = fit_line(FIT_WINDOW, rates)
    assert abs(intercept - asymptote_dd(2.0, 2.0, QOS).intercept) <= 0.2


def dd_gap_narrows_with_m0():
    gap1 = sinr_gap(asymptote_dd(1.0, 2.0, QOS), asymptote_ii(1.0, 2.0, QOS))
    gap6 = sinr_gap(asymptote_dd(6.0, 2.0, QOS), asymptote_ii(6.0, 2.0, QOS))
    assert gap1 > gap6


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

def path_loss_fifty_metres():
    assert abs(path_loss_db(50.0) - (38.46 + 20.0 * math.log10(50.0))) <= 1e-12
    assert abs(path_loss_db(50.0) - 72.4394) <= 5e-5


def tx_power_compensation():
    pl = path_loss_db(50.0)
    assert abs(tx_power_dbm(pl, PowerSpec()) - (-67.0 + 0.7 * pl)) <= 1e-12
    assert abs(tx_power_dbm(pl, PowerSpec()) - (-16.2924)) <= 5e-5


def reuse_three_interferer_count():
    sc = generate(LayoutSpec(reuse=3))
    counts = [len(sc.interferers(u)) for u in range(sc.n_ues)]
    assert max(counts) <= 3 and min(counts) >= 1


SMALL_LAYOUT = LayoutSpec(rows=1, cols=3, ue_per_cell=2, reuse=1, seed=0)


def _small_run(cases, trials=2_000_000, gamma_bar_db=20.0):
    exp = build_experiment(generate(SMALL_LAYOUT), 0, gamma_bar_db)
    return monte_carlo_cases(exp, cases, QOS, trials, seed=1)


def mc_level_a_conservative():
    agg, _ = _small_run(["D/A"])["D/A"]
    assert agg.empirical_bler + agg.ci_half_width < QOS.eps_req


def mc_level_m_optimistic():
    _, per = _small_run(["I/M"])["I/M"]
    worst = max(per, key=lambda s: s.empirical_bler)
    assert worst.empirical_bler - worst.ci_half_width > QOS.eps_req


DERIVED = (
    ("special/ln_gamma_stirling", ln_gamma_stirling),
    ("special/digamma_finite_difference", digamma_finite_difference),
    ("special/upper_gamma_quadrature", upper_gamma_quadrature),
    ("special/inc_beta_polynomial", inc_beta_polynomial),
    ("special/gauss_2f1_two_paths", gauss_2f1_two_paths),
    ("special/lambert_w0_bisection", lambert_w0_bisection),
    ("special/inv_q_bisection", inv_q_bisection),
    ("distributions/aggregate_two_links", aggregate_two_links),
    ("distributions/mixture_symmetric_candidates", mixture_symmetric_candidates),
    ("distributions/project_level_a_inverse_gamma", project_level_a_inverse_gamma),
    ("distributions/scaled_f_cdf_monte_carlo", scaled_f_cdf_monte_carlo),
    ("distributions/gamma_power_variance", gamma_power_variance),
    ("fbl/dispersion_hand_values", dispersion_hand_values),
    ("fbl/inst_rate_composition", inst_rate_composition),
    ("engine/avg_bler_monte_carlo", avg_bler_monte_carlo),
    ("engine/closed_form_matches_quadrature", closed_form_matches_quadrature),
    ("engine/c2_high_sinr_limit", c2_high_sinr_limit),
    ("engine/fixed_rate_self_consistency", fixed_rate_self_consistency),
    ("engine/mixture_fixed_rate_dominance", mixture_fixed_rate_dominance),
    ("engine/id_asymptote_shift_m0_one", id_asymptote_shift_m0_one),
    ("engine/id_nested_vs_asymptote", id_nested_vs_asymptote),
    ("engine/ii_intercept_regression", ii_intercept_regression),
    ("engine/c4_unit_shape_direct", c4_unit_shape_direct),
    ("engine/id_intercept_regression", id_intercept_regression),
    ("engine/dd_intercept_regression", dd_intercept_regression),
    ("engine/dd_gap_narrows_with_m0", dd_gap_narrows_with_m0),
    ("scenario/path_loss_fifty_metres", path_loss_fifty_metres),
    ("scenario/tx_power_compensation", tx_power_compensation),
    ("scenario/reuse_three_interferer_count", reuse_three_interferer_count),
    ("scenario/mc_level_a_conservative", mc_level_a_conservative),
    ("scenario/mc_level_m_optimistic", mc_level_m_optimistic),
)
