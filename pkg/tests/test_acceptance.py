"""End-to-end acceptance checks.

One test per release criterion; each prints a single summary line with the
measured numbers. Run with ``pytest tests/test_acceptance.py -v -s`` to see
the lines as they pass.
"""

import json
import math

import numpy as np

from cvqkd_access.capacity import network_capacity_curve
from cvqkd_access.cli import main
from cvqkd_access.estimation import estimate_channel, exact_estimate
from cvqkd_access.keyrate import (KeyRateInputs, finite_size_rate, holevo_bound,
                                  mutual_information)
from cvqkd_access.scheduler import CrosstalkTable, max_onus
from cvqkd_access.simulate import QuadratureDataset, simulate_dataset
from cvqkd_access.units import ChannelModel, SystemParams

from oracles import holevo_purification

HEADLINE_PARAMS = SystemParams(
    rep_rate_hz=5e6, duty_cycle=0.1, mod_variance_snu=4.0, recon_efficiency=0.95,
    det_efficiency=1.0, elec_noise_snu=0.0, block_length=10**8, key_fraction=0.5,
    security_eps=(1e-10, 1e-10, 1e-10))


def _announce(tag, detail):
    print(f"\n[acceptance] {tag}: PASS ({detail})")


def test_c1_headline_rate_bracket():
    # 6 dB and 8 dB links, ideal detector, factor-2 brackets around the
    # reference working points; must run configured-parameters-only (< 1 s)
    skr = {}
    for loss in (6.0, 8.0):
        est = exact_estimate(ChannelModel(loss, 0.018), HEADLINE_PARAMS)
        skr[loss] = finite_size_rate(est, HEADLINE_PARAMS).skr_bps
    assert 112e3 <= skr[6.0] <= 450e3
    assert 87e3 <= skr[8.0] <= 350e3
    assert skr[6.0] > skr[8.0]
    _announce("C1 headline-rate bracket",
              f"skr(6 dB) = {skr[6.0] / 1e3:.1f} kbps, skr(8 dB) = {skr[8.0] / 1e3:.1f} kbps")


def test_c2_max_onu_bound():
    count = max_onus(5e6, 25.0)
    assert count == 8
    _announce("C2 max-ONU bound", f"max_onus(5 MHz, 25 ns) = {count}")


def test_c3_pipeline_consistency():
    # simulate -> estimate -> keyrate at n = 1e6 over 30 seeds versus the
    # direct evaluation at ground truth with identical finite-size treatment
    params = SystemParams(block_length=10**6)
    channel = ChannelModel(6.0, 0.018)
    t_true = 0.251188643150958
    direct = finite_size_rate(exact_estimate(channel, params), params).skr_bps

    t_hats, xi_hats, rates = [], [], []
    for k in range(30):
        ds = simulate_dataset(params, channel, 10**6, 42, onu_id=f"seed-{k}")
        pe = slice(0, params.n_pe)
        subset = QuadratureDataset(ds.alice[pe], ds.bob[pe], ds.calibration,
                                   ds.seed, ds.ground_truth)
        est = estimate_channel(subset, params)
        t_hats.append(est.T_hat)
        xi_hats.append(est.xi_hat)
        rates.append(finite_size_rate(est, params).skr_bps)

    mean_t, mean_xi = float(np.mean(t_hats)), float(np.mean(xi_hats))
    p5, p95 = np.percentile(rates, [5, 95])
    assert abs(mean_t / t_true - 1.0) < 0.01
    assert abs(mean_xi - 0.018) < 0.003
    assert p5 <= direct <= p95
    _announce("C3 pipeline consistency",
              f"mean T_hat = {mean_t:.6f} (true {t_true:.6f}), mean xi_hat = {mean_xi:.5f}, "
              f"direct rate {direct:.0f} bps in [{p5:.0f}, {p95:.0f}]")


def test_c4_holevo_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        t = float(rng.uniform(0.05, 1.0))
        xi = float(rng.uniform(0.0, 0.1))
        v_a = float(rng.uniform(1.0, 10.0))
        closed = holevo_bound(KeyRateInputs(V=v_a + 1.0, T=t, xi=xi))
        reference = holevo_purification(v_a + 1.0, t, xi)
        worst = max(worst, abs(closed - reference))
    assert worst < 1e-6
    _announce("C4 Holevo oracle equivalence", f"max |diff| = {worst:.2e} bits over 100 draws")


def test_c5_trivial_limits():
    leak = holevo_bound(KeyRateInputs(V=5.0, T=1.0, xi=0.0))
    assert abs(leak) <= 1e-9

    i_ab = mutual_information(KeyRateInputs(V=5.0, T=1.0, xi=0.0))
    assert abs(i_ab - 0.5 * math.log2(5.0)) <= 1e-9
    assert f"{i_ab:.6f}" == "1.160964"

    zero_table = CrosstalkTable(entries={1: 0.0}, default_beyond=0.0)
    curve = network_capacity_curve(6.26, HEADLINE_PARAMS, zero_table, 8,
                                   base_excess_noise_snu=0.018)
    single = curve[0][1]
    assert all(total == n * single for n, total in curve)
    _announce("C5 trivial limits",
              f"chi(T=1, xi=0) = {leak:.1e}, I_AB = {i_ab:.9f}, capacity exactly linear")


def test_c6_capacity_shape():
    table = CrosstalkTable.default()
    assert all(table.entries[1] > table.entries[d] for d in (2, 3, 4))
    curve = network_capacity_curve(6.26, HEADLINE_PARAMS, table, 8,
                                   base_excess_noise_snu=0.018)
    totals = [t for _, t in curve]
    first_diff = np.diff(totals)
    second_diff = np.diff(first_diff)
    assert np.all(first_diff > 0)
    assert np.all(second_diff <= 0)
    _announce("C6 capacity shape",
              f"totals {totals[0] / 1e3:.0f}..{totals[-1] / 1e3:.0f} kbps strictly increasing, "
              f"max second difference = {second_diff.max():.1f} bps")


def test_c7_estimator_coverage():
    eps_pe = 1e-2
    params = SystemParams(block_length=10**6, security_eps=(eps_pe, 1e-10, 1e-10))
    channel = ChannelModel(6.0, 0.018)
    t_true = channel.transmittance
    n_pe, reps = 10**5, 500
    violations = 0
    for k in range(reps):
        ds = simulate_dataset(params, channel, n_pe, 777, onu_id=f"cov-{k}", n_cal=2)
        est = estimate_channel(ds, params)
        if t_true < est.T_min or 0.018 > est.xi_max:
            violations += 1
    limit = 10 * eps_pe * reps
    assert violations <= limit
    _announce("C7 estimator coverage",
              f"{violations}/{reps} violations (allowed {limit:.0f}) at eps_pe = {eps_pe}")


def test_c8_pipeline_determinism(tmp_path):
    config = {
        "params": {
            "rep_rate_hz": 5e6, "duty_cycle": 0.1, "mod_variance_snu": 4.0,
            "recon_efficiency": 0.95, "det_efficiency": 1.0, "elec_noise_snu": 0.0,
            "block_length": 100_000, "key_fraction": 0.5,
            "security_eps": [1e-10, 1e-10, 1e-10],
        },
        "channels": [
            {"onu_id": "onu1", "loss_db": 6.0, "excess_noise_snu": 0.018},
            {"onu_id": "onu2", "loss_db": 8.0, "excess_noise_snu": 0.018},
        ],
        "seed": 42,
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config), encoding="utf-8")
    out_serial = tmp_path / "serial"
    out_threaded = tmp_path / "threaded"
    assert main(["pipeline", "--config", str(cfg), "--out", str(out_serial),
                 "--threads", "1"]) == 0
    assert main(["pipeline", "--config", str(cfg), "--out", str(out_threaded),
                 "--threads", "8"]) == 0

    serial_files = sorted(p.name for p in out_serial.iterdir())
    threaded_files = sorted(p.name for p in out_threaded.iterdir())
    assert serial_files == threaded_files
    for name in serial_files:
        assert (out_serial / name).read_bytes() == (out_threaded / name).read_bytes(), name
    _announce("C8 pipeline determinism",
              f"{len(serial_files)} files byte-identical with 1 and 8 threads")
