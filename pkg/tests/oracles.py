"""Independent reference implementations used by the tests.

Nothing here imports dcclab numerics: the oracles are mpmath, scipy's
quadrature, bisection and plain series written out term by term.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate as sp_integrate

from dcclab import special

N_RANDOM = 1000


def rel_err(value, ref, floor=0.0):
    ref = float(ref)
    return abs(float(value) - ref) / max(abs(ref), floor)


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stirling_ln_gamma(x, shift=30, terms=20):
    """ln Gamma(x) by upward recurrence and a Bernoulli-number Stirling series."""
    with mp.workdps(50):
        x = mp.mpf(x)
        y = x + shift
        s = (y - mp.mpf(0.5)) * mp.log(y) - y + mp.log(2 * mp.pi) / 2
        for k in range(1, terms + 1):
            s += mp.bernoulli(2 * k) / (2 * k * (2 * k - 1) * y ** (2 * k - 1))
        for j in range(shift):
            s -= mp.log(x + j)
        return float(s)


def upper_gamma_quadrature(s, x):
    val, _ = sp_integrate.quad(lambda t: t ** (s - 1.0) * math.exp(-t), x, np.inf,
                               epsabs=0.0, epsrel=1e-13, limit=200)
    return val / math.gamma(s)


def hyp2f1_series(a, b, c, z, terms):
    """Plain partial sum of the Gauss series in exact-ish mpmath arithmetic."""
    with mp.workdps(40):
        total = mp.mpf(1)
        term = mp.mpf(1)
        for n in range(terms):
            term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * mp.mpf(z)
            total += term
        return total


def inv_q_reference(p):
    """Root of Q(x) = p by bisection at 40 digits."""
    with mp.workdps(40):
        target = mp.mpf(p)
        f = lambda x: mp.erfc(x / mp.sqrt(2)) / 2 - target
        lo, hi = mp.mpf(-40), mp.mpf(40)
        # 75 halvings of [-40, 40] resolve the root to ~2e-21
        for _ in range(75):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


# ---------------------------------------------------------------------------
# randomized sweeps: each returns the worst error observed
# ---------------------------------------------------------------------------

def sweep_ln_gamma(seed=0, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in np.exp(rng.uniform(math.log(1e-3), math.log(1e4), n)):
        ref = mp.loggamma(mp.mpf(float(x)))
        worst = max(worst, rel_err(special.ln_gamma(float(x)), ref, floor=1.0))
    return worst


def sweep_digamma(seed=1, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in np.exp(rng.uniform(math.log(1e-3), math.log(1e4), n)):
        ref = mp.digamma(mp.mpf(float(x)))
        worst = max(worst, rel_err(special.digamma(float(x)), ref, floor=1.0))
    return worst


def sweep_ln_beta(seed=2, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a, b in np.exp(rng.uniform(math.log(0.05), math.log(200.0), (n, 2))):
        ref = mp.log(mp.beta(mp.mpf(float(a)), mp.mpf(float(b))))
        worst = max(worst, rel_err(special.ln_beta(float(a), float(b)), ref, floor=1.0))
    return worst


def sweep_reg_upper_gamma(seed=3, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        s = float(np.exp(rng.uniform(math.log(0.5), math.log(50.0))))
        x = float(s * np.exp(rng.uniform(-4.0, 1.5)))
        ref = mp.gammainc(s, x, mp.inf, regularized=True)
        worst = max(worst, rel_err(special.reg_upper_gamma(s, x), ref, floor=1e-300))
        ref_p = mp.gammainc(s, 0, x, regularized=True)
        worst = max(worst, rel_err(special.reg_lower_gamma(s, x), ref_p, floor=1e-300))
    return worst


def sweep_reg_inc_beta(seed=4, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a, b = np.exp(rng.uniform(math.log(0.5), math.log(30.0), 2))
        x = float(rng.uniform(0.0, 1.0))
        ref = mp.betainc(float(a), float(b), 0, x, regularized=True)
        worst = max(worst, rel_err(special.reg_inc_beta(float(a), float(b), x), ref, floor=1e-300))
    return worst


GAUSS_2F1_ACCURACY = special.Accuracy(rel_tol=1e-12)


def sweep_gauss_2f1(seed=5, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a, b = rng.uniform(0.5, 12.0, 2)
        c = rng.uniform(0.5, 30.0)
        region = rng.integers(3)
        z = (rng.uniform(-10.0, -0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 0.95))[region]
        ref = mp.hyp2f1(float(a), float(b), float(c), float(z))
        val = special.gauss_2f1(float(a), float(b), float(c), float(z), GAUSS_2F1_ACCURACY)
        worst = max(worst, rel_err(val, ref))
    return worst


def sweep_lambert_w0_forward(seed=6, n=N_RANDOM):
    """Forward error against mpmath away from the branch point."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    xs = np.concatenate([rng.uniform(-0.3, 1.0, n // 2), np.exp(rng.uniform(0.0, math.log(1e8), n - n // 2))])
    for x in xs:
        ref = mp.lambertw(float(x))
        worst = max(worst, rel_err(special.lambert_w0(float(x)), ref.real, floor=1e-300))
    return worst


def sweep_lambert_residual(n=N_RANDOM):
    """max |w e^w - x| / max(1, |x|) on log-spaced x of both signs."""
    worst = 0.0
    pos = np.logspace(-12, 12, n // 2)
    neg = -np.exp(-1.0) * np.logspace(-12, 0, n - n // 2)
    for x in np.concatenate([pos, neg]):
        w = special.lambert_w0(float(x))
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, abs(x)))
    return worst


def sweep_q_func(seed=7, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in rng.uniform(-10.0, 37.0, n):
        ref = mp.erfc(mp.mpf(float(x)) / mp.sqrt(2)) / 2
        worst = max(worst, rel_err(special.q_func(float(x)), ref, floor=1e-300))
    return worst


def sweep_inv_q(seed=8, n=N_RANDOM):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in np.exp(rng.uniform(math.log(1e-300), math.log(0.999999), n)):
        ref = inv_q_reference(float(p))
        worst = max(worst, abs(special.inv_q(float(p)) - ref) / max(abs(ref), 1e-3))
    return worst


# (name, sweep, tolerance) for the acceptance suite
SPECIAL_FUNCTION_ORACLES = (
    ("ln_gamma vs mpmath", sweep_ln_gamma, 1e-13),
    ("digamma vs mpmath", sweep_digamma, 1e-12),
    ("ln_beta vs mpmath", sweep_ln_beta, 1e-12),
    ("incomplete gamma vs mpmath", sweep_reg_upper_gamma, 1e-12),
    ("incomplete beta vs mpmath", sweep_reg_inc_beta, 1e-12),
    ("gauss_2f1 vs mpmath", sweep_gauss_2f1, 1e-12),
    ("lambert_w0 vs mpmath", sweep_lambert_w0_forward, 1e-12),
    ("lambert_w0 residual", sweep_lambert_residual, 1e-12),
    ("q_func vs mpmath", sweep_q_func, 1e-12),
    ("inv_q vs mpmath root", sweep_inv_q, 1e-12),
)
