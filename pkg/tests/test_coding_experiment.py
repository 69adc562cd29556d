import math

import numpy as np
import pytest

from freqcap.channel import ChannelParams, CountVector, transmit
from freqcap.coding_experiment import (
    Codebook,
    ExperimentConfig,
    decode_ml,
    decode_threshold,
    density_correction,
    feinstein_rhs,
    generate_codebook,
    run_experiment,
    select_tau,
)
from freqcap.distributions import DiscretePmf, RngStream, truncated_rounded_input_pmf
from freqcap.mutual_info import PoissonChannelSpec, mutual_information
from freqcap.special_math import log_factorial as fc_log_factorial


def point_mass(x0):
    return DiscretePmf(x0, np.array([0.0]))


class TestSelectTau:
    def test_point_mass(self):
        tau, p_hat = select_tau(point_mass(3), 40, 1000, RngStream(1))
        assert tau == 120
        assert p_hat == 1.0

    def test_desk_scale_window(self):
        pmf = truncated_rounded_input_pmf(8.0, 0.5)
        tau, p_hat = select_tau(pmf, 500, 2000, RngStream(2))
        assert 0.7 * 8.0 <= tau / 500 <= 1.3 * 8.0
        # far above the 1/(3 n g) floor at desk scale
        assert p_hat >= 0.5 / (3 * 500 * 8.0)

    def test_requires_real_pilot(self):
        with pytest.raises(ValueError):
            select_tau(point_mass(2), 10, 999, RngStream(0))


class TestGenerateCodebook:
    def test_point_mass_one_attempt_each(self):
        pmf = point_mass(2)
        cb = generate_codebook(5, 10, pmf, 20, RngStream(3))
        assert len(cb) == 5
        assert cb.attempts == 5
        assert np.all(cb.matrix == 2)

    def test_every_word_sums_to_tau(self):
        pmf = truncated_rounded_input_pmf(8.0, 0.5)
        tau, _ = select_tau(pmf, 100, 2000, RngStream(4))
        cb = generate_codebook(32, 100, pmf, tau, RngStream(5))
        assert np.all(cb.matrix.sum(axis=1) == tau)

    def test_acceptance_rate_consistent_with_pilot(self):
        pmf = truncated_rounded_input_pmf(8.0, 0.5)
        n = 200
        tau, p_hat = select_tau(pmf, n, 20_000, RngStream(6))
        cb = generate_codebook(300, n, pmf, tau, RngStream(7))
        sigma = math.sqrt(p_hat * (1 - p_hat) / cb.attempts) + math.sqrt(
            p_hat * (1 - p_hat) / 20_000
        )
        assert abs(cb.accept_rate - p_hat) <= 3.0 * sigma

    def test_budget_exhaustion_reports_rate(self):
        pmf = truncated_rounded_input_pmf(8.0, 0.5)
        with pytest.raises(RuntimeError, match="acceptance rate"):
            # a sum of 1 is unreachable for 50 positive entries
            generate_codebook(2, 50, pmf, 1, RngStream(8), max_attempts_per_word=5000)


class TestDecodeMl:
    def params(self, n=2, g=4.0, r=2.0):
        return ChannelParams(n, g, r)

    def test_single_codeword(self):
        cb = Codebook(np.array([[3, 1]]), 4, point_mass(1), 1, (0, 0))
        params = self.params()
        assert decode_ml(CountVector([4, 0]), cb, params) == 0

    def test_disjoint_support_never_chosen(self):
        cb = Codebook(np.array([[4, 0], [0, 4]]), 4, point_mass(1), 2, (0, 0))
        params = self.params()
        assert decode_ml(CountVector([0, 4]), cb, params) == 1
        assert decode_ml(CountVector([4, 0]), cb, params) == 0

    def test_impossible_output_is_failure(self):
        cb = Codebook(np.array([[4, 0, 0]]), 4, point_mass(1), 1, (0, 0))
        params = ChannelParams(3, 4.0, 2.0)
        assert decode_ml(CountVector([0, 3, 3]), cb, params) is None

    def test_tie_breaks_low_index(self):
        cb = Codebook(np.array([[2, 2], [2, 2]]), 4, point_mass(2), 2, (0, 0))
        assert decode_ml(CountVector([3, 1]), cb, self.params()) == 0

    def test_wrong_total_rejected(self):
        cb = Codebook(np.array([[2, 2]]), 4, point_mass(2), 1, (0, 0))
        with pytest.raises(ValueError):
            decode_ml(CountVector([1, 1]), cb, self.params())

    def test_well_separated_error_rate(self):
        # two random codewords at r/g = 4 are essentially never confused
        pmf = truncated_rounded_input_pmf(4.0, 0.5)
        n = 200
        params = ChannelParams(n, 4.0, 16.0)
        rng = RngStream(21)
        tau, _ = select_tau(pmf, n, 2000, rng.substream(1))
        cb = generate_codebook(2, n, pmf, tau, rng.substream(2))
        msgs = rng.substream(3).generator.integers(0, 2, size=1000)
        croot = rng.substream(4)
        errors = 0
        for t in range(1000):
            y = transmit(cb.codeword(int(msgs[t])), params, croot.substream(t))
            if decode_ml(y, cb, params) != int(msgs[t]):
                errors += 1
        assert errors / 1000 < 0.01


class TestDecodeThreshold:
    def setup_small(self):
        pmf = truncated_rounded_input_pmf(8.0, 0.5)
        n = 100
        params = ChannelParams(n, 8.0, 0.5)
        rng = RngStream(22)
        tau, _ = select_tau(pmf, n, 2000, rng.substream(1))
        cb = generate_codebook(4, n, pmf, tau, rng.substream(2))
        spec = PoissonChannelSpec(pmf, params.reads / tau)
        y = transmit(cb.codeword(2), params, rng.substream(3))
        return y, cb, spec, params

    def test_minus_infinity_accepts_first(self):
        y, cb, spec, params = self.setup_small()
        assert decode_threshold(y, cb, -math.inf, spec, params) == 0

    def test_plus_infinity_erases(self):
        y, cb, spec, params = self.setup_small()
        assert decode_threshold(y, cb, math.inf, spec, params) is None

    def test_accepts_plain_input_law(self):
        y, cb, _, params = self.setup_small()
        assert decode_threshold(y, cb, -math.inf, cb.input_pmf, params) == 0

    def test_wrong_total_rejected(self):
        y, cb, spec, params = self.setup_small()
        with pytest.raises(ValueError):
            decode_threshold(CountVector(y.counts[:-1].tolist() + [int(y.counts[-1]) + 1]), cb,
                             0.0, spec, ChannelParams(params.n, params.g, params.r + 1.0))


class TestFeinsteinRhs:
    def test_union_term_alone(self):
        # with log M = log gamma - n delta the M/gamma term is e^(-n delta)
        n_delta = 2.5
        log_gamma = 7.0
        m = 55
        bound = feinstein_rhs(0.0, m, log_gamma, 1.0)
        assert bound.value == pytest.approx(m * math.exp(-log_gamma), rel=1e-12)
        implied = feinstein_rhs(0.0, m, math.log(m) + n_delta, 1.0)
        assert implied.value == pytest.approx(math.exp(-n_delta), rel=1e-12)

    def test_clamped_to_unit(self):
        bound = feinstein_rhs(0.9, 1000, 0.0, 0.5)
        assert bound.value == 1.0
        assert bound.saturated
        assert bound.raw > 1.0

    def test_huge_negative_log_gamma_saturates(self):
        bound = feinstein_rhs(0.0, 2, -5000.0, 1.0)
        assert bound.value == 1.0 and bound.saturated

    def test_rejects_zero_constraint_probability(self):
        with pytest.raises(ValueError):
            feinstein_rhs(0.1, 2, 0.0, 0.0)


class TestExperimentConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n=10, g=2.0, r=1.0, decoder="viterbi")
        with pytest.raises(ValueError):
            ExperimentConfig(n=10, g=2.0, r=1.0, m=1)
        with pytest.raises(ValueError):
            ExperimentConfig(n=10, g=2.0, r=1.0, trials=0)

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment\nn=100\ng=8.0\nr=0.5\nrho=0.5\ndelta=0.1\nm=16\n"
            "decoder=ml\ntrials=50\nseed=3\npilot_samples=1500\n"
        )
        config = ExperimentConfig.from_file(str(path))
        assert config.n == 100 and config.m == 16 and config.decoder == "ml"
        assert config.pilot_samples == 1500

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("n=100\ng=8\nr=0.5\nbogus=1\n")
        with pytest.raises(ValueError, match="bogus"):
            ExperimentConfig.from_file(str(path))


LADDER_BASE = dict(
    n=24, g=8.0, r=0.5, rho=0.5, decoder="ml", trials=400, seed=9,
    pilot_samples=2000, spectrum_samples=500,
)


class TestRunExperiment:
    def test_two_codewords_high_read_budget(self):
        # r close to e*g: two random codewords are far apart
        config = ExperimentConfig(
            n=200, g=4.0, r=10.87, rho=0.5, delta=0.1, m=2, decoder="threshold",
            trials=400, seed=5, pilot_samples=2000, spectrum_samples=500,
        )
        report = run_experiment(config)
        assert report.error_rate < 0.05

    def test_ml_does_not_lose_to_threshold(self):
        config_t = ExperimentConfig(m=128, delta=0.05, **LADDER_BASE)
        config_t = ExperimentConfig(**{**config_t.to_dict(), "decoder": "threshold"})
        report_t = run_experiment(config_t)
        report_m = run_experiment(ExperimentConfig(m=128, delta=0.05, **LADDER_BASE))
        sigma = math.sqrt(
            max(report_t.error_rate * (1 - report_t.error_rate), 0.25 / report_t.trials)
            / report_t.trials
        )
        assert report_m.error_rate <= report_t.error_rate + 3.0 * sigma

    def test_rate_field_exact(self):
        report = run_experiment(ExperimentConfig(m=128, **LADDER_BASE))
        assert report.rate == math.log(128) / 24

    def test_reproducible_reports(self):
        config = ExperimentConfig(m=64, **LADDER_BASE)
        assert run_experiment(config).to_json() == run_experiment(config).to_json()

    def test_rate_error_ladder(self):
        # halving M never increases the error beyond statistical noise
        reports = [
            run_experiment(ExperimentConfig(m=m, **LADDER_BASE)) for m in (512, 256, 128)
        ]
        rates = [r.error_rate for r in reports]
        for bigger, smaller in zip(rates, rates[1:]):
            sigma = math.sqrt(max(bigger * (1 - bigger), 1e-4) / reports[0].trials)
            assert smaller <= bigger + 3.0 * sigma

    def test_density_mean_tracks_mutual_information(self):
        # Decompose the consistency check: the Monte-Carlo density mean must
        # sit within 4 standard errors of its exact expectation under the
        # fixed-read-total channel (per-slot reads are binomial), and that
        # exact expectation must in turn be close to the surrogate mutual
        # information (they differ by a small fixed-total conditioning term).
        from scipy.stats import binom

        config = ExperimentConfig(
            n=2000, g=8.0, r=3.2, rho=0.5, delta=0.3, m=2, decoder="threshold",
            trials=200, seed=41, pilot_samples=4000, spectrum_samples=500,
        )
        report = run_experiment(config)
        pmf = truncated_rounded_input_pmf(config.g, config.rho)
        reads = ChannelParams(config.n, config.g, config.r).reads
        spec = PoissonChannelSpec(pmf, reads / report.tau)
        mi = mutual_information(spec)
        assert report.mutual_information == pytest.approx(mi, abs=1e-12)

        # exact per-letter expectation, by support value, under Bin(nr, x/tau)
        z = np.arange(spec.z_max + 1)
        expect_by_value = {}
        for x in pmf.support:
            lam = spec.gain * x
            dens = (-lam + z * math.log(lam) - fc_log_factorial(z)) - spec.log_pz
            expect_by_value[int(x)] = float(binom.pmf(z, reads, x / report.tau) @ dens)

        # reconstruct the codebook the experiment used and average over the
        # two codewords (messages are drawn uniformly)
        rng = RngStream(config.seed)
        tau, _ = select_tau(pmf, config.n, config.pilot_samples, rng.substream(1))
        assert tau == report.tau
        cb = generate_codebook(report.m, config.n, pmf, tau, rng.substream(2))
        exact = np.mean(
            [sum(expect_by_value[int(v)] for v in row) / config.n for row in cb.matrix]
        )
        per_letter_sd = math.sqrt(0.51 / config.n)
        mc_se = per_letter_sd / math.sqrt(config.trials)
        assert abs(report.mean_true_density - exact) <= 4.0 * mc_se
        assert abs(exact - mi) <= 0.01

    def test_trace_file(self, tmp_path):
        path = tmp_path / "trace.csv"
        config = ExperimentConfig(m=16, **LADDER_BASE)
        run_experiment(config, trace_path=str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "trial,true_msg,decoded,density_value"
        assert len(lines) == 1 + config.trials

    def test_stage_labels_on_failure(self):
        config = ExperimentConfig(n=50, g=1.5, r=1.0, rho=0.5)  # g too small for the law
        with pytest.raises(RuntimeError, match="input-law"):
            run_experiment(config)

    def test_sizing_rule_reports_clamp(self):
        config = ExperimentConfig(
            n=500, g=8.0, r=3.2, rho=0.5, delta=0.3, decoder="threshold",
            trials=10, seed=11, pilot_samples=2000, spectrum_samples=500,
        )
        report = run_experiment(config)
        assert report.m == 2 and report.m_clamped
        assert any("clamped" in note for note in report.notes)


def test_density_correction_value():
    assert density_correction(1600) == pytest.approx(0.5 * math.log(6 * math.pi * 1600), abs=1e-12)
    with pytest.raises(ValueError):
        density_correction(0)
