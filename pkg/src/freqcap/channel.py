"""The frequency-based channel.

A codeword is a pool of objects described by a count vector x (x_i objects
of type i, total at most n*g). Reading draws n*r objects uniformly with
replacement from the pool, optionally perturbs each read through a
column-stochastic kernel, and reports the histogram of read types. The
Poissonized surrogate replaces the fixed read total with independent
Poisson counts of mean (r/g) * x_i, which is what makes the exact
mutual-information computations tractable.
"""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .distributions import RngStream, multinomial_sample
from .special_math import log_factorial

__all__ = [
    "ChannelParams",
    "CountVector",
    "validate_codeword",
    "transmit",
    "transmit_poissonized",
    "multinomial_poisson_ratio_log",
    "poissonization_identity_check",
    "event_poissonization_factor",
]

_DENSE_LIMIT = 10**6
_FRAME_MAGIC = b"FQCV"


@dataclass(frozen=True)
class ChannelParams:
    """One channel instance: n object types, input budget n*g, read budget n*r.

    The kernel, when present, is column-stochastic with kernel[j, i] the
    probability that a read of a type-i object is recorded as type j;
    absent means noiseless reading. n*r must be an integer number of reads:
    a fractional read count is rejected rather than silently rounded.
    """

    n: int
    g: float
    r: float
    kernel: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.g <= 0.0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.r <= 0.0:
            raise ValueError(f"r must be positive, got {self.r}")
        reads = self.n * self.r
        if abs(reads - round(reads)) > 1e-9:
            raise ValueError(f"n*r = {reads} does not round to an integer read count")
        if self.kernel is not None:
            w = np.asarray(self.kernel, dtype=float)
            if w.shape != (self.n, self.n):
                raise ValueError(f"kernel must be {self.n}x{self.n}, got {w.shape}")
            if np.any(w < 0):
                raise ValueError("kernel entries must be non-negative")
            col_sums = w.sum(axis=0)
            if np.any(np.abs(col_sums - 1.0) > 1e-9):
                raise ValueError("kernel columns must each sum to 1 within 1e-9")
            w = w.copy()
            w.setflags(write=False)
            object.__setattr__(self, "kernel", w)

    @property
    def reads(self) -> int:
        """Total number of reads n*r, as an exact integer."""
        return int(round(self.n * self.r))

    @property
    def budget(self) -> int:
        """Largest admissible object total, floor(n*g)."""
        return math.floor(self.n * self.g + 1e-9)

    def is_noiseless(self) -> bool:
        return self.kernel is None


class CountVector:
    """Non-negative integer counts per object type (codeword or channel output)."""

    __slots__ = ("counts",)

    def __init__(self, counts):
        arr = np.asarray(counts, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if np.any(arr < 0):
            raise ValueError("counts must be non-negative")
        self.counts = arr

    @property
    def n(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        """Counts normalized to pool concentrations; needs a non-empty pool."""
        total = self.total
        if total <= 0:
            raise ValueError("cannot normalize an empty count vector")
        return self.counts / total

    def to_json(self) -> str:
        return json.dumps(self.counts.tolist())

    @classmethod
    def from_json(cls, text: str) -> "CountVector":
        return cls(json.loads(text))

    def to_bytes(self) -> bytes:
        """Binary framing: magic 'FQCV', then n, then the entries (little-endian u32)."""
        if np.any(self.counts > 0xFFFFFFFF):
            raise ValueError("counts exceed the u32 framing range")
        return (
            _FRAME_MAGIC
            + struct.pack("<I", self.n)
            + self.counts.astype("<u4").tobytes()
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CountVector":
        if blob[:4] != _FRAME_MAGIC:
            raise ValueError("bad magic in count-vector frame")
        (n,) = struct.unpack("<I", blob[4:8])
        body = blob[8 : 8 + 4 * n]
        if len(body) != 4 * n:
            raise ValueError("truncated count-vector frame")
        return cls(np.frombuffer(body, dtype="<u4").astype(np.int64))

    def __eq__(self, other):
        return isinstance(other, CountVector) and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"CountVector(n={self.n}, total={self.total})"


def validate_codeword(x: CountVector, params: ChannelParams):
    """None if x is an admissible codeword, else a violation message.

    Admissible means: positive object total not exceeding the budget n*g.
    A dimension mismatch is a usage error and raises instead.
    """
    if x.n != params.n:
        raise ValueError(f"codeword has {x.n} types, channel expects {params.n}")
    total = x.total
    if total <= 0:
        return "empty pool: codeword must contain at least one object"
    if total > params.n * params.g + 1e-9:
        return f"object total {total} exceeds the budget n*g = {params.n * params.g:g}"
    return None


def transmit(x: CountVector, params: ChannelParams, rng: RngStream) -> CountVector:
    """One channel use: sample n*r reads with replacement from the pool of x.

    Reads are perturbed by the kernel (applied to the pool concentrations)
    before the histogram is taken; the output always sums to exactly n*r.
    """
    violation = validate_codeword(x, params)
    if violation is not None:
        raise ValueError(violation)
    if params.n > _DENSE_LIMIT:
        raise NotImplementedError(
            f"dense outputs are limited to n <= {_DENSE_LIMIT}; larger n needs a sparse path"
        )
    probs = x.frequencies()
    if params.kernel is not None:
        probs = params.kernel @ probs
    return CountVector(multinomial_sample(params.reads, probs, rng))


def transmit_poissonized(x: CountVector, params: ChannelParams, rng: RngStream) -> CountVector:
    """Poisson surrogate channel: independent z_i ~ Poisson((r/g) * x_i).

    Only the noiseless kernel is supported; the surrogate for a noisy
    kernel is not uniquely determined by the sampling model, so it is
    rejected rather than guessed.
    """
    violation = validate_codeword(x, params)
    if violation is not None:
        raise ValueError(violation)
    if not params.is_noiseless():
        raise NotImplementedError("the Poissonized surrogate is defined only for noiseless reading")
    lam = (params.r / params.g) * x.counts
    return CountVector(rng.generator.poisson(lam).astype(np.int64))


def multinomial_poisson_ratio_log(total_samples: int) -> float:
    """Exact log-ratio between the fixed-total and Poissonized read likelihoods.

    For any feasible output, the conditional multinomial likelihood with M
    reads exceeds the product-Poisson one by exactly M!/(M^M e^-M); this
    returns its log, which Stirling brackets inside
    [0.5 ln(2 pi M), 0.5 ln(6 pi M)].
    """
    m = int(total_samples)
    if m < 1:
        raise ValueError(f"total_samples must be >= 1, got {total_samples}")
    return float(log_factorial(m) - m * math.log(m) + m)


def _poisson_log_pmf_grid(hi: int, lam: float) -> np.ndarray:
    k = np.arange(hi + 1)
    with np.errstate(divide="ignore"):
        return -lam + k * math.log(lam) - log_factorial(k)


def poissonization_identity_check(total_mean: float, probs) -> float:
    """Max absolute PMF discrepancy in the multinomial Poissonization identity.

    For G with a Poisson(M) number of trials split multinomially along p,
    the per-type counts are independent Poisson(M p_j). Enumerates all
    outputs y in a box large enough to carry the mass and compares
    Poi(sum y; M) * Mul(y; sum y, p) against prod_j Poi(y_j; M p_j);
    the discrepancy is pure floating-point noise.
    """
    if total_mean <= 0.0 or total_mean > 30.0:
        raise ValueError("exact enumeration is limited to total_mean in (0, 30]")
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size > 4:
        raise ValueError("exact enumeration is limited to dimension <= 4")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be positive and sum to 1")

    means = total_mean * p
    highs = [int(m + 8.0 * math.sqrt(m) + 15.0) for m in means]
    grids = [np.arange(h + 1) for h in highs]
    mesh = np.meshgrid(*grids, indexing="ij")
    ys = np.stack([m.ravel() for m in mesh], axis=1)  # (num_points, dim)
    totals = ys.sum(axis=1)

    # joint law through the conditional multinomial, all in log space
    log_poi_total = (
        -total_mean + totals * math.log(total_mean) - log_factorial(totals)
    )
    log_mult = log_factorial(totals) - log_factorial(ys).sum(axis=1) + ys @ np.log(p)
    lhs = np.exp(log_poi_total + log_mult)

    rhs = np.ones(ys.shape[0])
    for j in range(p.size):
        rhs = rhs * np.exp(_poisson_log_pmf_grid(highs[j], means[j])[ys[:, j]])
    return float(np.max(np.abs(lhs - rhs)))


def event_poissonization_factor(total_samples: int) -> float:
    """Price of moving an event probability to the Poissonized channel: sqrt(e*M).

    P[G in E] <= sqrt(e M) * P[G~ in E] for every event E, where G has a
    fixed total of M reads and G~ is its product-Poisson counterpart.
    """
    m = int(total_samples)
    if m < 1:
        raise ValueError(f"total_samples must be >= 1, got {total_samples}")
    return math.sqrt(math.e * m)
