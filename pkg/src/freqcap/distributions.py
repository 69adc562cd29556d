"""Seeded random streams, finite PMFs, samplers, and certified tail bounds.

The sampling side covers exactly the laws the channel machinery needs:
Poisson, the Gamma(1/2, 2g) pool-size law and its truncated-and-rounded
integer version, max-entropy geometric laws, and multinomial reads.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .special_math import log_factorial, regularized_gamma_p

__all__ = [
    "RngStream",
    "DiscretePmf",
    "TruncationInterval",
    "poisson_log_pmf",
    "poisson_sample",
    "poisson_entropy",
    "gamma_half_sample",
    "truncated_rounded_input_pmf",
    "geometric_max_entropy_pmf",
    "multinomial_sample",
    "poisson_chernoff_lower_tail",
    "gamma_half_tail_bounds",
]

_U64 = 2**64


class RngStream:
    """Counter-based seeded random stream (Philox) with independent stream ids.

    Identical (seed, stream_id) pairs replay identical draw sequences,
    regardless of how many other streams exist; this is what makes
    experiment results reproducible across worker counts. A single stream
    is stateful and must not be shared between concurrent workers.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) % _U64
        self.stream_id = int(stream_id) % _U64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def substream(self, index: int) -> "RngStream":
        """Independent child stream; deterministic in (seed, stream_id, index)."""
        return RngStream(self.seed, (self.stream_id * 1_000_003 + int(index) + 1) % _U64)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


class DiscretePmf:
    """Probability mass function on consecutive integers, held in log space.

    The support is {support_offset, ..., support_offset + s - 1}. Weights
    are normalized at construction; exp(log_weights) sums to one within
    1e-12 by construction.
    """

    def __init__(self, support_offset: int, log_weights):
        lw = np.asarray(log_weights, dtype=float)
        if lw.ndim != 1 or lw.size == 0:
            raise ValueError("log_weights must be a non-empty 1-D array")
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise ValueError("log_weights must be finite or -inf")
        m = lw.max()
        if m == -np.inf:
            raise ValueError("PMF has no mass")
        lw = lw - (m + math.log(np.exp(lw - m).sum()))
        self.support_offset = int(support_offset)
        self.log_weights = lw
        self._probs = np.exp(lw)

    @classmethod
    def from_weights(cls, support_offset: int, weights) -> "DiscretePmf":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        with np.errstate(divide="ignore"):
            return cls(support_offset, np.log(w))

    @property
    def size(self) -> int:
        return self.log_weights.size

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_offset, self.support_offset + self.size)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def mean(self) -> float:
        return float(self._probs @ self.support)

    def entropy(self) -> float:
        p = self._probs
        mask = p > 0
        return float(-(p[mask] * self.log_weights[mask]).sum())

    def sample(self, rng: RngStream, size=None):
        p = self._probs / self._probs.sum()
        return rng.generator.choice(self.support, p=p, size=size)

    def to_json(self) -> str:
        return json.dumps(
            {"offset": self.support_offset, "log_weights": self.log_weights.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "DiscretePmf":
        doc = json.loads(text)
        return cls(doc["offset"], doc["log_weights"])

    def __repr__(self):
        return f"DiscretePmf(offset={self.support_offset}, size={self.size})"


@dataclass(frozen=True)
class TruncationInterval:
    """Support window [s_min, s_max] used to restrict the pool-size law.

    The window must straddle 1 (s_min < 1 < s_max); the integer-rounded
    construction relies on that.
    """

    s_min: float
    s_max: float

    def __post_init__(self):
        if not (0.0 < self.s_min < 1.0 < self.s_max):
            raise ValueError(
                f"truncation interval needs s_min < 1 < s_max, got [{self.s_min}, {self.s_max}]"
            )

    @classmethod
    def for_budget(cls, g: float, rho: float) -> "TruncationInterval":
        """The window [g^-(1+3 rho), g^(1+rho)] used by the input construction."""
        return cls(g ** -(1.0 + 3.0 * rho), g ** (1.0 + rho))


def poisson_log_pmf(k, lam: float):
    """log P[Z = k] for Z ~ Poisson(lam); k may be a scalar or array."""
    if lam <= 0.0:
        raise ValueError(f"poisson_log_pmf needs lambda > 0, got {lam}")
    arr = np.asarray(k)
    if np.any(arr < 0):
        raise ValueError("poisson_log_pmf needs k >= 0")
    out = -lam + arr * math.log(lam) - log_factorial(arr)
    if np.isscalar(k) or np.ndim(k) == 0:
        return float(out)
    return out


def poisson_sample(lam: float, rng: RngStream, size=None):
    """Poisson draw(s); inversion for small means, transformed rejection for large."""
    if lam < 0.0:
        raise ValueError(f"poisson_sample needs lambda >= 0, got {lam}")
    out = rng.generator.poisson(lam, size=size)
    if size is None:
        return int(out)
    return out


def poisson_entropy(lam: float, tail_tol: float = 1e-14) -> float:
    """Entropy of Poisson(lam) in nats, summed until the missed mass < tail_tol.

    The missed mass outside the summation window is certified analytically
    through the incomplete gamma function rather than by 1 - sum(p), which
    drowns in float rounding at this tolerance.
    """
    if lam <= 0.0:
        raise ValueError(f"poisson_entropy needs lambda > 0, got {lam}")
    half = 12.0 * math.sqrt(lam) + 35.0
    lo = max(0, int(lam - half))
    hi = int(lam + half) + 1
    for _ in range(64):
        # P[Z <= k] = 1 - P_reg(k + 1, lam); both window tails certified
        tail_above = regularized_gamma_p(hi + 1.0, lam)
        tail_below = 1.0 - regularized_gamma_p(lo, lam) if lo > 0 else 0.0
        if tail_above + tail_below < tail_tol:
            k = np.arange(lo, hi + 1)
            logp = poisson_log_pmf(k, lam)
            p = np.exp(logp)
            return float(-(p * logp).sum())
        lo = max(0, lo - int(half))
        hi = hi + int(half) + 1
    raise RuntimeError(f"poisson_entropy window failed to capture the mass at lambda={lam}")


def gamma_half_sample(g: float, rng: RngStream, size=None):
    """Draw from Gamma(shape 1/2, scale 2g) as g * N^2 with N standard normal.

    The chi-square identity makes this exact and branch-free; the law has
    mean g and variance 2 g^2.
    """
    if g <= 0.0:
        raise ValueError(f"gamma_half_sample needs g > 0, got {g}")
    n = rng.generator.standard_normal(size=size)
    return g * n * n


def _gamma_half_cdf(x: float, g: float) -> float:
    """CDF of Gamma(1/2, 2g) at x via the regularized incomplete gamma."""
    if x <= 0.0:
        return 0.0
    return regularized_gamma_p(0.5, x / (2.0 * g))


def truncated_rounded_input_pmf(g: float, rho: float) -> DiscretePmf:
    """Integer input law: Gamma(1/2, 2g) restricted to a window, then rounded up.

    The window is [g^-(1+3 rho), g^(1+rho)]. For integer k >= 1 the mass is
    (F(min(k, s_max)) - F(max(k-1, s_min)))+ renormalized by the window mass,
    with F the Gamma(1/2, 2g) CDF. The support is {1, ..., ceil(g^(1+rho))}
    and there is never mass at zero.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if g < 2.0:
        raise ValueError(f"need g >= 2 so the truncation window keeps solid mass, got {g}")
    window = TruncationInterval.for_budget(g, rho)
    s_min, s_max = window.s_min, window.s_max
    top = math.ceil(s_max)

    # CDF at the clipped cell boundaries 0..top; consecutive differences give cells.
    bounds = np.clip(np.arange(0, top + 1, dtype=float), s_min, s_max)
    cdf = np.array([_gamma_half_cdf(b, g) for b in bounds])
    cells = np.clip(np.diff(cdf), 0.0, None)
    denom = cdf[-1] - cdf[0]
    if denom <= 0.0:
        raise ArithmeticError(f"truncation window mass underflowed at g={g}, rho={rho}")
    return DiscretePmf.from_weights(1, cells / denom)


def geometric_max_entropy_pmf(mu: float, tail_tol: float = 1e-14) -> DiscretePmf:
    """Geometric law on {0, 1, 2, ...} with mean mu, truncated and renormalized.

    This is the entropy maximizer among non-negative integer laws with mean
    at most mu; its entropy equals psi_max_entropy(mu) up to the truncation.
    """
    if mu < 0.0:
        raise ValueError(f"geometric_max_entropy_pmf needs mu >= 0, got {mu}")
    if mu == 0.0:
        return DiscretePmf(0, np.array([0.0]))
    theta = 1.0 / (mu + 1.0)
    log_q = math.log1p(-theta)
    top = max(1, math.ceil(math.log(tail_tol) / log_q))
    k = np.arange(0, top + 1)
    return DiscretePmf(0, math.log(theta) + k * log_q)


def multinomial_sample(trials: int, probs, rng: RngStream) -> np.ndarray:
    """Histogram of `trials` categorical draws; one pass of conditional binomials.

    Returns an integer vector with the exact total `trials`.
    """
    if trials < 0:
        raise ValueError(f"multinomial_sample needs trials >= 0, got {trials}")
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1 within 1e-9, got {total}")
    return rng.generator.multinomial(int(trials), p / total).astype(np.int64)


def poisson_chernoff_lower_tail(lam: float, alpha: float) -> float:
    """Chernoff bound on P[Z <= alpha * lam] for Z ~ Poisson(lam), alpha <= 1.

    Returns exp(-lam (1 - alpha ln(e/alpha))), never above the looser
    exp(-lam (1-alpha)^2 / 2).
    """
    if lam <= 0.0:
        raise ValueError(f"needs lambda > 0, got {lam}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"needs alpha in (0, 1], got {alpha}")
    tight = math.exp(-lam * (1.0 - alpha * (1.0 - math.log(alpha))))
    loose = math.exp(-0.5 * lam * (1.0 - alpha) ** 2)
    return min(tight, loose)


def gamma_half_tail_bounds(g: float, eta: float, rho: float):
    """Certified tail bounds for X ~ Gamma(1/2, 2g).

    Returns (lower, upper): P[X <= g^eta] <= g^-((1-eta)/2) for eta < 1, and
    P[X >= g^(1+rho)] <= 2 exp(-g^rho / 2) for rho > 0.
    """
    if g <= 0.0:
        raise ValueError(f"needs g > 0, got {g}")
    if eta >= 1.0:
        raise ValueError(f"needs eta < 1, got {eta}")
    if rho <= 0.0:
        raise ValueError(f"needs rho > 0, got {rho}")
    lower = g ** (-(1.0 - eta) / 2.0)
    upper = 2.0 * math.exp(-(g**rho) / 2.0)
    return lower, upper
