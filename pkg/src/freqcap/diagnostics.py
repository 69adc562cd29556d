"""Self-contained property checks runnable from the command line.

Each check validates one certified identity, bound, or concentration
inequality against exact enumeration or seeded Monte-Carlo with 3-sigma
statistical slack. These back `freqcap verify`; the pytest suite covers
the same ground with finer assertions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import event_poissonization_factor, poissonization_identity_check
from .distributions import (
    RngStream,
    gamma_half_tail_bounds,
    poisson_chernoff_lower_tail,
    poisson_entropy,
    poisson_log_pmf,
)
from .mutual_info import PoissonChannelSpec, bobkov_ledoux_bound, lipschitz_seminorm
from .distributions import DiscretePmf
from .special_math import regularized_gamma_p

__all__ = ["CheckResult", "run_suite", "SUITES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check_poissonization_identity(seed):
    worst = 0.0
    for mean, probs in ((5.0, [0.5, 0.5]), (10.0, [0.2, 0.3, 0.5]), (20.0, [0.1, 0.2, 0.3, 0.4])):
        worst = max(worst, poissonization_identity_check(mean, probs))
    return CheckResult("poissonization-identity", worst <= 1e-10, f"max pmf discrepancy {worst:.2e}")


def _check_event_poissonization(seed):
    # exact enumeration: two uniform types, M reads, event {y1 >= 5}
    m = 6
    k = np.arange(m + 1)
    binom = np.exp(
        np.array([math.lgamma(m + 1) - math.lgamma(i + 1) - math.lgamma(m - i + 1) for i in k])
    ) * 0.5**m
    p_mul = binom[k >= 5].sum()
    lam = m / 2
    z = np.arange(200)
    poi = np.exp(poisson_log_pmf(z, lam))
    p_poi = poi[z >= 5].sum()
    ok = p_mul <= event_poissonization_factor(m) * p_poi + 1e-15
    return CheckResult(
        "event-poissonization", bool(ok), f"P_mul={p_mul:.5f} vs sqrt(eM)*P_poi={event_poissonization_factor(m)*p_poi:.5f}"
    )


def _check_poisson_entropy(seed):
    grid = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 60.0, 150.0]
    values = [poisson_entropy(lam) for lam in grid]
    mono = all(a <= b + 1e-10 for a, b in zip(values, values[1:]))
    upper = all(
        h <= 0.5 * math.log(2 * math.pi * math.e * (lam + 1.0 / 12.0))
        for h, lam in zip(values, grid)
    )
    return CheckResult("poisson-entropy", mono and upper, f"monotone={mono} upper-bound={upper}")


def _check_v_log_v(seed):
    worst = -math.inf
    for lam in (0.1, 1.0, 5.0, 20.0):
        k = np.arange(1, int(lam + 40 * math.sqrt(lam + 1)) + 60)
        p = np.exp(poisson_log_pmf(k, lam))
        value = float((p * k * np.log(k)).sum())
        worst = max(worst, value - lam * math.log1p(lam))
    return CheckResult("poisson-v-log-v", worst <= 0.0, f"max E[VlnV]-bound gap {worst:.3e}")


def _check_poisson_chernoff(seed):
    ok = True
    for lam, alpha in ((20.0, 0.5), (50.0, 0.2), (8.0, 0.9)):
        k = np.arange(0, int(alpha * lam) + 1)
        exact = float(np.exp(poisson_log_pmf(k, lam)).sum())
        ok = ok and exact <= poisson_chernoff_lower_tail(lam, alpha) + 1e-15
    return CheckResult("poisson-chernoff", ok, "exact lower-tail CDF under the bound")


def _check_gamma_tails(seed):
    ok = True
    for g, eta, rho in ((100.0, 0.0, 0.5), (1000.0, 0.3, 0.3)):
        lower, upper = gamma_half_tail_bounds(g, eta, rho)
        exact_low = regularized_gamma_p(0.5, g**eta / (2 * g))
        exact_up = 1.0 - regularized_gamma_p(0.5, g ** (1 + rho) / (2 * g))
        ok = ok and exact_low <= lower + 1e-15 and exact_up <= upper + 1e-15
    return CheckResult("gamma-half-tails", ok, "exact CDF tails under the certified bounds")


def _check_hoeffding(seed):
    rng = RngStream(seed, 101)
    n, samples, p = 400, 20000, 0.3
    draws = rng.generator.binomial(n, p, size=samples)
    ok = True
    for t in (0.03, 0.06):
        freq = float((draws / n - p >= t).mean())
        bound = math.exp(-2 * n * t * t)
        slack = 3.0 * math.sqrt(bound * (1 - bound) / samples + 1e-12)
        ok = ok and freq <= bound + slack
    return CheckResult("hoeffding-mc", ok, "empirical tail under the bound + 3 sigma")


def _check_relative_chernoff(seed):
    rng = RngStream(seed, 102)
    n, samples, p = 500, 20000, 0.05
    draws = rng.generator.binomial(n, p, size=samples)
    ok = True
    for xi in (0.5, 1.0):
        freq = float((draws / n - p >= xi * p).mean())
        bound = math.exp(-xi * xi * p * n / (2 + xi))
        slack = 3.0 * math.sqrt(bound * (1 - bound) / samples + 1e-12)
        ok = ok and freq <= bound + slack
    return CheckResult("relative-chernoff-mc", ok, "empirical tail under the bound + 3 sigma")


def _check_bobkov_ledoux(seed):
    rng = RngStream(seed, 103)
    support = DiscretePmf.from_weights(1, np.ones(8))
    spec = PoissonChannelSpec(support, 0.5)
    n, samples, delta = 400, 4000, 0.35
    beta = lipschitz_seminorm(spec)
    lam_bar = spec.gain * 8
    bound = bobkov_ledoux_bound(beta, lam_bar, n, delta)

    xs = support.sample(rng, size=n).astype(float)
    lam = spec.gain * xs
    mean_density = float(
        sum(
            np.exp(poisson_log_pmf(np.arange(spec.z_max + 1), l))
            @ (poisson_log_pmf(np.arange(spec.z_max + 1), l) - spec.log_pz)
            for l in lam
        )
    )
    zs = rng.generator.poisson(lam, size=(samples, n))
    from .special_math import log_factorial

    dens = (-lam + zs * np.log(lam) - log_factorial(zs.ravel()).reshape(zs.shape)) - spec.log_output_pmf_at(
        zs.ravel()
    ).reshape(zs.shape)
    totals = dens.sum(axis=1)
    freq = float((totals < mean_density - n * delta).mean())
    slack = 3.0 * math.sqrt(bound * (1 - bound) / samples + 1e-12)
    ok = freq <= bound + slack
    return CheckResult("bobkov-ledoux-mc", ok, f"freq={freq:.4f} bound={bound:.4f}")


def _check_sub_gamma(seed):
    rng = RngStream(seed, 104)
    k, theta, samples = 50.0, 2.0, 200000
    draws = rng.generator.gamma(k, theta, size=samples)
    ok = True
    for t in (25.0, 50.0):
        freq = float((draws >= k * theta + t).mean())
        bound = math.exp(-t / (2 * theta)) + math.exp(-t * t / (4 * k * theta * theta))
        slack = 3.0 * math.sqrt(max(freq, bound) / samples + 1e-12)
        ok = ok and freq <= bound + slack
    return CheckResult("sub-gamma-right-tail-mc", ok, "empirical tail under the bound + 3 sigma")


_APPENDIX = (
    _check_poissonization_identity,
    _check_event_poissonization,
    _check_poisson_entropy,
    _check_v_log_v,
    _check_poisson_chernoff,
    _check_gamma_tails,
    _check_hoeffding,
    _check_relative_chernoff,
    _check_bobkov_ledoux,
    _check_sub_gamma,
)

SUITES = {"appendix": _APPENDIX, "all": _APPENDIX}


def run_suite(name: str, seed: int = 0):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    return [check(seed) for check in SUITES[name]]
