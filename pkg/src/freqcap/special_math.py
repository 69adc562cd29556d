"""Self-contained special functions and scalar optimization.

Everything here is a pure function of its arguments. All entropic
quantities are in nats; conversion to bits happens only at the
presentation layer.
"""

import math

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Nats",
    "NATS_PER_BIT",
    "binary_entropy",
    "psi_max_entropy",
    "lambert_w0",
    "regularized_gamma_p",
    "log_factorial",
    "maximize_unimodal",
]

# Entropies, information densities and bounds are plain floats in nats.
Nats = float

NATS_PER_BIT = math.log(2.0)

_E = math.e
_TABLE_MAX = 1024
# log k! for k = 0..1024 as a cumulative sum of logs; exact to double rounding.
_LOG_FACT_TABLE = np.concatenate(
    ([0.0], np.cumsum(np.log(np.arange(1, _TABLE_MAX + 1))))
)


def binary_entropy(p: float) -> Nats:
    """Binary entropy -p*ln(p) - (1-p)*ln(1-p) with the 0*ln(0) = 0 convention."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def psi_max_entropy(mu: float) -> Nats:
    """Largest entropy of a non-negative integer random variable with mean <= mu.

    The maximizer is the geometric law with success probability 1/(mu+1),
    giving (mu+1) * binary_entropy(1/(mu+1)). Non-decreasing and concave in mu.
    """
    if mu < 0.0:
        raise ValueError(f"psi_max_entropy needs mu >= 0, got {mu}")
    if mu == 0.0:
        return 0.0
    return (mu + 1.0) * binary_entropy(1.0 / (mu + 1.0))


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function: w with w*exp(w) = x.

    Defined for x >= -1/e. Uses a log-based initial guess refined by
    Halley iteration (Newton in log coordinates for large x, which avoids
    overflow of exp(w)); the residual |w*exp(w) - x| stays below
    1e-12 * max(1, |x|).
    """
    if x < -1.0 / _E:
        raise ValueError(f"lambert_w0 needs x >= -1/e, got {x}")
    if x == 0.0:
        return 0.0

    if x >= _E:
        # Solve w + ln(w) = ln(x) by Newton; quadratic and overflow-free.
        lx = math.log(x)
        w = lx - math.log(lx)
        for _ in range(64):
            step = (w + math.log(w) - lx) * w / (w + 1.0)
            w -= step
            if abs(step) <= 1e-16 * (1.0 + abs(w)):
                break
        return w

    # Moderate and near-branch-point arguments: Halley on w*exp(w) - x.
    if x > 0.0:
        w = x / (1.0 + x)  # crude but inside the basin for 0 < x < e
    else:
        p = math.sqrt(2.0 * (1.0 + _E * x))  # branch-point expansion
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    for _ in range(128):
        ew = math.exp(w)
        f = w * ew - x
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        if denom == 0.0:
            break
        step = f / denom
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def regularized_gamma_p(k: float, x: float) -> float:
    """Lower regularized incomplete gamma function P(k, x) = gamma(k, x)/Gamma(k).

    Power series for x < k + 1, Lentz continued fraction otherwise;
    absolute error below 1e-12 over the supported domain.
    """
    if k <= 0.0:
        raise ValueError(f"regularized_gamma_p needs k > 0, got k={k}")
    if x < 0.0:
        raise ValueError(f"regularized_gamma_p needs x >= 0, got x={x}")
    if x == 0.0:
        return 0.0

    log_prefactor = k * math.log(x) - x - math.lgamma(k)
    if x < k + 1.0:
        # gamma(k,x) = x^k e^-x sum_n x^n / (k (k+1) ... (k+n))
        ap = k
        term = 1.0 / k
        total = term
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                return total * math.exp(log_prefactor)
        raise RuntimeError(f"incomplete gamma series failed for k={k}, x={x}")

    # Continued fraction for the upper function Q(k, x), modified Lentz.
    tiny = 1e-300
    b = x + 1.0 - k
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - k)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            q = math.exp(log_prefactor) * h
            return 1.0 - q
    raise RuntimeError(f"incomplete gamma continued fraction failed for k={k}, x={x}")


def log_factorial(k):
    """log(k!) for non-negative integers, scalar or array.

    Exact cumulative-sum table for k <= 1024, log-gamma beyond; monotone in k.
    """
    arr = np.asarray(k)
    if np.any(arr < 0):
        raise ValueError("log_factorial needs k >= 0")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise ValueError("log_factorial needs integer k")
        arr = arr.astype(np.int64)
    small = np.minimum(arr, _TABLE_MAX)
    out = np.where(arr <= _TABLE_MAX, _LOG_FACT_TABLE[small], gammaln(arr + 1.0))
    if np.isscalar(k) or np.ndim(k) == 0:
        return float(out)
    return out


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_unimodal(f, lo: float, hi: float, tol: float):
    """Golden-section search for the maximum of a unimodal f on [lo, hi].

    Returns (argmax, max). The argmax is within tol of the true maximizer.
    """
    if not lo < hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
