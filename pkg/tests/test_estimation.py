import math

import numpy as np
import pytest

from cvqkd_access.estimation import (ChannelEstimate, EstimationError, SufficientStats,
                                     estimate_channel, estimate_from_stats,
                                     exact_estimate, worst_case_bounds)
from cvqkd_access.simulate import QuadratureDataset, simulate_dataset
from cvqkd_access.units import ChannelModel, SystemParams

from oracles import confidence_bounds

PARAMS = SystemParams(block_length=10**6)
CHANNEL = ChannelModel(loss_db=6.0, excess_noise_snu=0.018)


def make_estimate(t_hat, s_sq, n_pe, eta=1.0, v_el=0.0, eps_pe=1e-10):
    t_sq_over_eta = t_hat * t_hat / eta
    return ChannelEstimate(
        t_hat=t_hat, T_hat=t_sq_over_eta,
        xi_hat=(s_sq - 1.0 - v_el) / t_sq_over_eta,
        n_pe=n_pe, T_min=math.nan, xi_max=math.nan,
        s_sq=s_sq, eta=eta, v_el=v_el, eps_pe=eps_pe)


class TestEstimateChannel:
    def test_recovers_ground_truth_over_seeds(self):
        # Monte Carlo oracle: the estimator mean over repeated seeds must sit
        # within 3 standard errors of the truth
        t_true = CHANNEL.transmittance
        n, seeds = 10**5, 30
        t_hats, xi_hats = [], []
        for seed in range(seeds):
            ds = simulate_dataset(PARAMS, CHANNEL, n, 1000 + seed, onu_id="est")
            est = estimate_channel(ds, PARAMS)
            t_hats.append(est.T_hat)
            xi_hats.append(est.xi_hat)
        se_t = np.std(t_hats, ddof=1) / math.sqrt(seeds)
        se_xi = np.std(xi_hats, ddof=1) / math.sqrt(seeds)
        assert abs(np.mean(t_hats) - t_true) < 3 * se_t
        assert abs(np.mean(xi_hats) - 0.018) < 3 * se_xi

    def test_noiseless_identity_channel(self):
        channel = ChannelModel(loss_db=0.0, excess_noise_snu=0.0)
        ds = simulate_dataset(PARAMS, channel, 10**6, 7, onu_id="ident")
        est = estimate_channel(ds, PARAMS)
        # xi_hat fluctuates about zero with std ~ sqrt(2/n)/T
        assert abs(est.xi_hat) < 5 * math.sqrt(2.0 / 10**6)
        assert est.T_hat == pytest.approx(1.0, abs=0.01)

    def test_degenerate_transmitter_data_rejected(self):
        ds = QuadratureDataset(np.zeros(100), np.ones(100), np.ones(10), 0)
        with pytest.raises(EstimationError):
            estimate_channel(ds, PARAMS)

    def test_inverted_channel_rejected(self):
        rng = np.random.default_rng(3)
        x_a = rng.normal(0, 2, 1000)
        ds = QuadratureDataset(x_a, -x_a, np.ones(10), 0)
        with pytest.raises(EstimationError):
            estimate_channel(ds, PARAMS)

    def test_too_few_samples_rejected(self):
        ds = QuadratureDataset(np.ones(1), np.ones(1), np.ones(2), 0)
        with pytest.raises(EstimationError):
            estimate_channel(ds, PARAMS)

    def test_negative_xi_hat_reported_unclamped(self):
        # a noiseless run can fluctuate below zero; diagnostics keep the sign
        channel = ChannelModel(loss_db=0.0, excess_noise_snu=0.0)
        values = []
        for seed in range(20):
            ds = simulate_dataset(PARAMS, channel, 10**4, 50 + seed, onu_id="fluct")
            values.append(estimate_channel(ds, PARAMS).xi_hat)
        assert min(values) < 0  # at least one downward fluctuation survives


class TestSufficientStats:
    def test_merged_chunks_equal_full_estimate(self):
        ds = simulate_dataset(PARAMS, CHANNEL, 10**5, 11, onu_id="merge")
        full = estimate_from_stats(SufficientStats.from_samples(ds.alice, ds.bob), PARAMS)
        third = len(ds) // 3
        parts = [
            SufficientStats.from_samples(ds.alice[:third], ds.bob[:third]),
            SufficientStats.from_samples(ds.alice[third:2 * third], ds.bob[third:2 * third]),
            SufficientStats.from_samples(ds.alice[2 * third:], ds.bob[2 * third:]),
        ]
        merged = parts[0].merge(parts[1]).merge(parts[2])
        combined = estimate_from_stats(merged, PARAMS)
        assert combined.t_hat == pytest.approx(full.t_hat, rel=1e-12)
        assert combined.s_sq == pytest.approx(full.s_sq, rel=1e-12)
        assert combined.xi_hat == pytest.approx(full.xi_hat, rel=1e-9)
        assert combined.n_pe == full.n_pe

    def test_merge_is_associative(self):
        rng = np.random.default_rng(12)
        chunks = [SufficientStats.from_samples(rng.normal(0, 2, 100), rng.normal(0, 1, 100))
                  for _ in range(3)]
        left = chunks[0].merge(chunks[1]).merge(chunks[2])
        right = chunks[0].merge(chunks[1].merge(chunks[2]))
        assert left == pytest.approx(right) or (
            left.n == right.n
            and left.sum_aa == pytest.approx(right.sum_aa, rel=1e-12)
            and left.sum_ab == pytest.approx(right.sum_ab, rel=1e-12)
            and left.sum_bb == pytest.approx(right.sum_bb, rel=1e-12))


class TestWorstCaseBounds:
    def test_frozen_reference_values(self):
        # T_hat = 0.2512, xi_hat = 0.018, V_A = 4, n_pe = 5e7, eps = 1e-10
        est = make_estimate(t_hat=math.sqrt(0.2512), s_sq=1.0 + 0.2512 * 0.018, n_pe=5 * 10**7)
        t_min, xi_max = worst_case_bounds(est, 4.0, 1e-10)
        assert t_min == pytest.approx(0.2507407962590791, rel=1e-9)
        assert xi_max == pytest.approx(0.02321456458217423, rel=1e-9)

    def test_matches_independent_implementation(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            t_hat = rng.uniform(0.1, 0.99)
            s_sq = rng.uniform(1.0, 1.2)
            n_pe = int(rng.integers(10**4, 10**8))
            eps = 10.0 ** rng.uniform(-12, -2)
            est = make_estimate(t_hat=t_hat, s_sq=s_sq, n_pe=n_pe)
            t_min, xi_max = worst_case_bounds(est, 4.0, eps)
            ref_t, ref_xi = confidence_bounds(t_hat, s_sq, n_pe, 4.0, eps)
            assert t_min == pytest.approx(ref_t, rel=1e-9)
            assert xi_max == pytest.approx(ref_xi, rel=1e-9, abs=1e-12)

    def test_bounds_bracket_point_estimates(self):
        est = exact_estimate(CHANNEL, PARAMS)
        assert 0 < est.T_min <= est.T_hat
        assert est.xi_max >= est.xi_hat
        assert est.n_pe >= 2

    def test_bounds_tighten_as_eps_grows(self):
        est = make_estimate(t_hat=0.5, s_sq=1.005, n_pe=10**6)
        results = [worst_case_bounds(est, 4.0, eps) for eps in (1e-10, 1e-6, 1e-2, 0.5)]
        t_mins = [r[0] for r in results]
        xi_maxs = [r[1] for r in results]
        assert all(a < b for a, b in zip(t_mins, t_mins[1:]))
        assert all(a > b for a, b in zip(xi_maxs, xi_maxs[1:]))

    def test_bounds_converge_with_samples(self):
        t_hat, s_sq = math.sqrt(0.2512), 1.0 + 0.2512 * 0.018
        gaps = []
        for n_pe in (10**4, 10**6, 10**8, 10**12):
            est = make_estimate(t_hat=t_hat, s_sq=s_sq, n_pe=n_pe)
            t_min, xi_max = worst_case_bounds(est, 4.0, 1e-10)
            gaps.append((est.T_hat - t_min) + (xi_max - est.xi_hat))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-4

    def test_dead_channel_discards_block(self):
        est = make_estimate(t_hat=1e-4, s_sq=1.0, n_pe=10**4)
        with pytest.raises(EstimationError):
            worst_case_bounds(est, 4.0, 1e-10)

    def test_invalid_eps_rejected(self):
        est = make_estimate(t_hat=0.5, s_sq=1.0, n_pe=10**6)
        for eps in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                worst_case_bounds(est, 4.0, eps)

    def test_xi_max_clamped_at_zero(self):
        # residual variance below shot noise: the bound cannot go negative
        est = make_estimate(t_hat=0.9, s_sq=0.98, n_pe=10**9)
        _, xi_max = worst_case_bounds(est, 4.0, 1e-10)
        assert xi_max == 0.0


class TestExactEstimate:
    def test_point_values_match_model(self):
        est = exact_estimate(CHANNEL, PARAMS)
        assert est.T_hat == pytest.approx(CHANNEL.transmittance, rel=1e-12)
        assert est.xi_hat == pytest.approx(0.018, rel=1e-9)
        assert est.n_pe == PARAMS.n_pe

    def test_detector_efficiency_enters_gain(self):
        params = SystemParams(det_efficiency=0.6, block_length=10**6)
        est = exact_estimate(CHANNEL, params)
        assert est.t_hat == pytest.approx(math.sqrt(0.6 * CHANNEL.transmittance), rel=1e-12)
        assert est.T_hat == pytest.approx(CHANNEL.transmittance, rel=1e-12)
