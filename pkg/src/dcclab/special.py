"""Special functions used by the closed forms and projected SINR laws.

Everything is binary64. Scalar kernels use the ``math`` module; the
incomplete gamma/beta functions and ``q_func`` also accept numpy arrays.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaln

from .errors import AccuracyError, DomainError

LOG2E = 1.0 / math.log(2.0)
EULER_GAMMA = 0.57721566490153286061
_TINY = 1e-300


@dataclass(frozen=True)
class Accuracy:
    """Truncation controls for series evaluations."""

    rel_tol: float = 1e-13
    max_terms: int = 200_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 100:
            raise DomainError(f"max_terms must be an integer >= 100, got {self.max_terms}")


DEFAULT_ACCURACY = Accuracy()


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _is_nonpositive_int(x):
    return x <= 0 and x == math.floor(x)


def _gamma_sign_log(x):
    """Return (sign, log|Gamma(x)|); sign is 0 at the poles."""
    if _is_nonpositive_int(x):
        return 0, -math.inf
    if x > 0:
        return 1, math.lgamma(x)
    sign = -1 if math.floor(x) % 2 == 1 else 1
    return sign, math.lgamma(x)


_PSI_ASYM = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
)


def _psi_positive(x):
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    f = 1.0 / (x * x)
    tail = 0.0
    for coef in reversed(_PSI_ASYM):
        tail = tail * f + coef
    return acc + math.log(x) - 0.5 / x + tail * f


def digamma(x):
    """Digamma function psi(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    return _psi_positive(x)


def _psi_any(x):
    # reflection for negative non-integers, used inside 2F1 connection sums
    if x > 0:
        return _psi_positive(x)
    if _is_nonpositive_int(x):
        raise DomainError(f"digamma pole at {x}")
    return _psi_positive(1.0 - x) - math.pi / math.tan(math.pi * x)


def ln_beta(a, b):
    """Natural log of the beta function."""
    if not (a > 0 and b > 0):
        raise DomainError(f"ln_beta requires a, b > 0, got ({a}, {b})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


# ---------------------------------------------------------------------------
# Incomplete gamma
# ---------------------------------------------------------------------------

def _gamma_prefactor(s, x):
    with np.errstate(divide="ignore"):
        return np.exp(s * np.log(x) - x - gammaln(s))


def _lower_series(s, x, max_iter=2000):
    # P(s, x) by the power series, valid and fast for x < s + 1
    ap = np.array(s, dtype=float)
    term = 1.0 / ap
    total = term.copy()
    for _ in range(max_iter):
        ap = ap + 1.0
        term = term * x / ap
        total = total + term
        if np.all(np.abs(term) <= np.abs(total) * 1e-17):
            break
    return total * _gamma_prefactor(s, x)


def _upper_cf(s, x, max_iter=2000):
    # Q(s, x) by the Legendre continued fraction (modified Lentz)
    b = x + 1.0 - s
    c = np.full_like(b, 1.0 / _TINY)
    d = 1.0 / np.where(np.abs(b) < _TINY, _TINY, b)
    h = d.copy()
    for i in range(1, max_iter):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= 1e-16):
            break
    return _gamma_prefactor(s, x) * h


def _incomplete_gamma_pair(s, x):
    s_arr, x_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    if np.any(~(s_arr > 0)):
        raise DomainError("incomplete gamma requires s > 0")
    if np.any(~(x_arr >= 0)):
        raise DomainError("incomplete gamma requires x >= 0")
    lower = np.zeros(s_arr.shape)
    upper = np.ones(s_arr.shape)
    use_series = (x_arr < s_arr + 1.0) & (x_arr > 0)
    use_cf = x_arr >= s_arr + 1.0
    infinite = np.isinf(x_arr)
    use_cf &= ~infinite
    if np.any(use_series):
        p = np.minimum(_lower_series(s_arr[use_series], x_arr[use_series]), 1.0)
        lower[use_series] = p
        upper[use_series] = 1.0 - p
    if np.any(use_cf):
        q = np.minimum(_upper_cf(s_arr[use_cf], x_arr[use_cf]), 1.0)
        upper[use_cf] = q
        lower[use_cf] = 1.0 - q
    lower[infinite] = 1.0
    upper[infinite] = 0.0
    return lower, upper


def _unwrap(value, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(value)
    return value


def reg_upper_gamma(s, x):
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    return _unwrap(_incomplete_gamma_pair(s, x)[1], s, x)


def reg_lower_gamma(s, x):
    """Regularized lower incomplete gamma P(s, x) = 1 - Q(s, x)."""
    return _unwrap(_incomplete_gamma_pair(s, x)[0], s, x)


# ---------------------------------------------------------------------------
# Incomplete beta
# ---------------------------------------------------------------------------

def _beta_cf(a, b, x, max_iter=5000):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
    h = d.copy()
    for m in range(1, max_iter):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= 1e-16):
            break
    return h


def inc_beta_pair(a, b, x, y=None):
    """Return (I_x(a,b), 1 - I_x(a,b)), each computed without cancellation.

    ``y`` may carry 1 - x when the caller knows it more accurately than
    the rounded subtraction.
    """
    x = np.asarray(x, dtype=float)
    y = 1.0 - x if y is None else np.asarray(y, dtype=float)
    a, b, x, y = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float), x, y)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("reg_inc_beta requires a, b > 0")
    if np.any(~((x >= 0) & (x <= 1))):
        raise DomainError("reg_inc_beta requires x in [0, 1]")
    flip = x >= (a + 1.0) / (a + b + 2.0)
    aa = np.where(flip, b, a)
    bb = np.where(flip, a, b)
    xx = np.where(flip, y, x)
    yy = np.where(flip, x, y)
    inner = (xx > 0) & (yy > 0)
    direct = np.zeros(x.shape)
    if np.any(inner):
        ai, bi, xi, yi = aa[inner], bb[inner], xx[inner], yy[inner]
        lnfront = (
            np.vectorize(math.lgamma)(ai + bi)
            - np.vectorize(math.lgamma)(ai)
            - np.vectorize(math.lgamma)(bi)
            + ai * np.log(xi)
            + bi * np.log(yi)
        )
        direct[inner] = np.minimum(np.exp(lnfront) * _beta_cf(ai, bi, xi) / ai, 1.0)
    direct[(xx > 0) & ~(yy > 0)] = 1.0
    value = np.where(flip, 1.0 - direct, direct)
    comp = np.where(flip, direct, 1.0 - direct)
    return value, comp


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    return _unwrap(inc_beta_pair(a, b, x)[0], a, b, x)


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1
# ---------------------------------------------------------------------------

def _series_2f1(a, b, c, z, acc, with_magnitude=False):
    total = 1.0
    term = 1.0
    magnitude = 1.0
    tol = min(acc.rel_tol, 1e-15)
    small_run = 0
    for n in range(acc.max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        term *= ratio
        total += term
        magnitude += abs(term)
        if term == 0.0 or (abs(term) <= tol * abs(total) and abs(ratio) < 1.0 and small_run >= 1):
            return (total, magnitude) if with_magnitude else total
        if abs(term) <= tol * abs(total) and abs(ratio) < 1.0:
            small_run += 1
        else:
            small_run = 0
    raise AccuracyError(
        f"2F1 series did not converge in {acc.max_terms} terms (a={a}, b={b}, c={c}, z={z})",
        estimate=total,
    )


def _poly_2f1(a, b, c, z):
    # a or b a non-positive integer: terminating sum
    deg = int(-a) if _is_nonpositive_int(a) else int(-b)
    terms = [1.0]
    term = 1.0
    for n in range(deg):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        terms.append(term)
    return math.fsum(terms), math.fsum(abs(t) for t in terms)


def _gamma_ratio(num, den, log_extra=0.0):
    """exp(log_extra) * prod Gamma(num) / prod Gamma(den), zero at a denominator pole."""
    sign = 1
    log = log_extra
    for x in den:
        s, lg = _gamma_sign_log(x)
        if s == 0:
            return 0.0
        sign *= s
        log -= lg
    for x in num:
        s, lg = _gamma_sign_log(x)
        if s == 0:
            raise DomainError(f"gamma pole at {x} in 2F1 connection coefficient")
        sign *= s
        log += lg
    return sign * math.exp(log)


def _near_one_2f1(a, b, c, z, acc):
    # 0.5 < z < 1: expand about 1 in y = 1 - z; when the two connection
    # pieces cancel heavily the direct series is better conditioned
    value, magnitude = _connection_2f1(a, b, c, z, acc)
    if magnitude <= 4.0 * abs(value):
        return value, magnitude
    try:
        direct, dmag = _series_2f1(a, b, c, z, acc, with_magnitude=True)
    except AccuracyError:
        return value, magnitude
    if dmag / max(abs(direct), _TINY) < magnitude / max(abs(value), _TINY):
        return direct, dmag
    return value, magnitude


def _connection_2f1(a, b, c, z, acc):
    y = 1.0 - z
    s = c - a - b
    m = round(s)
    if abs(s - m) > 1e-8:
        first = _gamma_ratio((c, s), (c - a, c - b))
        p1 = first * _dispatch_2f1(a, b, 1.0 - s, y, acc) if first != 0.0 else 0.0
        second = _gamma_ratio((c, -s), (a, b), s * math.log(y))
        p2 = second * _dispatch_2f1(c - a, c - b, 1.0 + s, y, acc) if second != 0.0 else 0.0
        return p1 + p2, abs(p1) + abs(p2)
    if m < 0:
        # Euler: F(a,b;c;z) = y^(c-a-b) F(c-a, c-b; c; z), with a positive integer gap
        value, magnitude = _log_case_2f1(c - a, c - b, -m, y, acc)
        return y ** s * value, y ** s * magnitude
    return _log_case_2f1(a, b, m, y, acc)


def _log_case_2f1(a, b, m, y, acc):
    """F(a, b; a+b+m; 1-y) for integer m >= 0 (logarithmic connection)."""
    c = a + b + m
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        return _poly_2f1(a, b, c, 1.0 - y)
    finite = 0.0
    if m > 0:
        # terms Gamma(c) (a)_k (b)_k (m-k-1)! (-y)^k / (Gamma(a+m) Gamma(b+m) k!)
        t = _gamma_ratio((c, float(m)), (a + m, b + m))
        if t != 0.0:
            terms = [t]
            for k in range(1, m):
                t *= (a + k - 1) * (b + k - 1) / k * (-y) / (m - k)
                terms.append(t)
            finite = math.fsum(terms)
    sign = -1.0 if m % 2 else 1.0
    pref2 = sign * _gamma_ratio((c,), (a, b, m + 1.0), m * math.log(y))
    if pref2 == 0.0:
        return finite, abs(finite)
    ln_y = math.log(y)
    tol = min(acc.rel_tol, 1e-15)
    terms = []
    t = 1.0
    psi_k1 = -EULER_GAMMA
    psi_km1 = _psi_positive(m + 1.0)
    for k in range(acc.max_terms):
        if k > 0:
            t *= (a + m + k - 1) * (b + m + k - 1) / (k * (k + m)) * y
            psi_k1 += 1.0 / k
            psi_km1 += 1.0 / (k + m)
        bracket = ln_y - psi_k1 - psi_km1 + _psi_any(a + k + m) + _psi_any(b + k + m)
        term = t * bracket
        terms.append(term)
        if k > 2 and abs(t) * (abs(ln_y) + 1.0) <= tol * abs(math.fsum(terms)) * 1e-1:
            break
    else:
        raise AccuracyError("2F1 logarithmic connection series did not converge",
                            estimate=finite - pref2 * math.fsum(terms))
    tail = pref2 * math.fsum(terms)
    return finite - tail, abs(finite) + abs(pref2) * math.fsum(abs(v) for v in terms)


def _pair_2f1(a, b, c, z, acc):
    """(value, sum of |pieces|) along the route chosen for z in [0, 1)."""
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0, 1.0
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        return _poly_2f1(a, b, c, z)
    if z <= 0.5:
        return _series_2f1(a, b, c, z, acc, with_magnitude=True)
    return _near_one_2f1(a, b, c, z, acc)


def _negative_2f1(a, b, c, z, acc):
    # Pfaff: F(a,b;c;z) = (1-z)^(-a) F(a, c-b; c; w) = (1-z)^(-b) F(c-a, b; c; w),
    # w = z/(z-1) in (0, 1). A variant whose series terms are all positive
    # cannot cancel; otherwise keep the best conditioned candidate.
    w = z / (z - 1.0)
    routes = [(a, c - b, a), (b, c - a, b)]
    routes.sort(key=lambda r: r[1] <= 0)
    best = None
    if z >= -0.5:
        value, magnitude = _series_2f1(a, b, c, z, acc, with_magnitude=True)
        best = (magnitude / max(abs(value), _TINY), value)
    for p, q, lead in routes:
        if best is not None and best[0] <= 4.0:
            break
        try:
            value, magnitude = _pair_2f1(p, q, c, w, acc)
        except AccuracyError:
            continue
        scale = math.exp(-lead * math.log1p(-z))
        cond = magnitude / max(abs(value), _TINY)
        if best is None or cond < best[0]:
            best = (cond, scale * value)
    if best is None:
        raise AccuracyError(f"2F1 failed on every route (a={a}, b={b}, c={c}, z={z})")
    return best[1]


def _dispatch_2f1(a, b, c, z, acc):
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        return _poly_2f1(a, b, c, z)[0]
    if z < 0.0:
        return _negative_2f1(a, b, c, z, acc)
    return _pair_2f1(a, b, c, z, acc)[0]


def gauss_2f1(a, b, c, z, acc=DEFAULT_ACCURACY):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1."""
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 undefined for non-positive integer c={c}")
    if not z < 1.0:
        raise DomainError(f"2F1 requires z < 1, got {z}")
    try:
        value = _dispatch_2f1(float(a), float(b), float(c), float(z), acc)
    except OverflowError as exc:
        raise AccuracyError(f"2F1 overflowed in binary64 (a={a}, b={b}, c={c}, z={z})") from exc
    if not math.isfinite(value):
        raise AccuracyError(f"2F1 is not finite in binary64 (a={a}, b={b}, c={c}, z={z})")
    return value


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

_INV_E = math.exp(-1.0)


def _halley_w(x, w):
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


def _branch_point_series(x, sign):
    p = sign * math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _clip_branch(x):
    if x < -_INV_E:
        if x >= -_INV_E * (1.0 + 4e-16):
            return -_INV_E
        raise DomainError(f"Lambert W requires x >= -1/e, got {x}")
    return x


def lambert_w0(x):
    """Principal branch of the Lambert W function."""
    x = _clip_branch(float(x))
    if x == 0.0:
        return 0.0
    if x == -_INV_E:
        return -1.0
    if x < -0.25:
        w = _branch_point_series(x, 1.0)
    elif x < 3.0:
        w = math.log1p(x) * (1.0 - 0.2 * math.log1p(x)) if x > 0 else x * (1.0 - x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    return _halley_w(x, w)


def lambert_wm1(x):
    """Lower real branch W_{-1} on [-1/e, 0)."""
    x = _clip_branch(float(x))
    if not x < 0.0:
        raise DomainError(f"W_-1 requires x in [-1/e, 0), got {x}")
    if x == -_INV_E:
        return -1.0
    if x < -0.25:
        w = _branch_point_series(x, -1.0)
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    return _halley_w(x, w)


def _newton_log_w(log_abs_x, w, lower):
    # solve w + ln|w| = log_abs_x
    for _ in range(100):
        f = w + math.log(-w if lower else w) - log_abs_x
        step = f / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


def lambert_w0_log(log_x):
    """W0(exp(log_x)) without forming exp(log_x); useful when x overflows."""
    if log_x < 2.0:
        return lambert_w0(math.exp(log_x))
    return _newton_log_w(log_x, log_x - math.log(log_x), lower=False)


def lambert_wm1_log(log_negx):
    """W_{-1}(-exp(log_negx)) for log_negx <= -1, stable as the argument goes to 0-."""
    if log_negx > -1.0:
        raise DomainError("W_-1 requires -exp(log_negx) >= -1/e")
    if log_negx > -3.0:
        return lambert_wm1(-math.exp(log_negx))
    return _newton_log_w(log_negx, log_negx - math.log(-log_negx), lower=True)


# ---------------------------------------------------------------------------
# Gaussian Q function
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def q_func(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


# rational approximation of the lower-tail normal quantile (Acklam)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def _acklam_lower(p):
    """Approximate Phi^{-1}(p) for p in (0, 0.5]."""
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def inv_q(p):
    """Inverse of q_func on (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"inv_q requires p in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    upper = p < 0.5
    tail = p if upper else 1.0 - p
    x = -_acklam_lower(tail)
    for _ in range(2):
        err = q_func(x) - tail
        x += err * _SQRT2PI * math.exp(0.5 * x * x)
    return x if upper else -x
