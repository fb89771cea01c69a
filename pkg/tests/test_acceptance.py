"""Acceptance suite: the eight top-level criteria at their stated tolerances.

Each test records one PASS/FAIL line, repeated in the pytest terminal summary.
"""
import math
import time

import numpy as np
import pytest

from airate import (ChannelScenario, build_qam, double_monte_carlo, fit, get_kind, gmi_rate,
                    mi_rate, simulate, simulate_batches, split_batch, true_gmi_oracle,
                    true_rate_oracle)
from airate.io import FormatError, batch_from_bytes, batch_to_bytes, read_batch, results_to_csv, write_batch
from airate.models import (conditional_covariances, conditional_means, dof_report,
                           pooled_variance)
from airate.sweep import rate_sweep
from conftest import noiseless_batch, record

FIVE = ["1D-iidG", "2D-iidG", "2D-CG", "4D-iidG", "4D-CG"]
WARPED = ChannelScenario("nl_phase", 14.0, n=200_000, seed=31, gamma=0.03, phase_std=0.05)


@pytest.fixture(scope="module")
def c():
    return build_qam(16)


@pytest.fixture(scope="module")
def warped_batches(c):
    return simulate_batches(c, WARPED, 4)


def test_1_awgn_oracle_match(c):
    t0 = time.perf_counter()
    errors = {}
    for snr in (6.0, 10.0, 14.0, 18.0):
        sc = ChannelScenario("awgn", snr, n=200_000, seed=101)
        est = double_monte_carlo(simulate_batches(c, sc, 4), get_kind("2D-iidG"), "MI", c)
        errors[snr] = abs(est.rate - true_rate_oracle(c, sc)) / 2
    elapsed = time.perf_counter() - t0
    ok = all(e < 0.01 for e in errors.values()) and elapsed < 60
    detail = ", ".join(f"{s:g} dB {e:.4f}" for s, e in errors.items())
    assert record(1, ok, f"|MI - oracle| per 2D: {detail} (< 0.01); runtime {elapsed:.1f} s (< 60 s)")


def test_2_estimators_agree_on_iid_noise(c):
    sc = ChannelScenario("awgn", 12.0, n=200_000, seed=102)
    rows = rate_sweep([sc], FIVE, ["MI"], c, n_batches=4)
    rates = {r["model"]: r["rate"] for r in rows}
    spread = max(rates.values()) - min(rates.values())
    detail = " ".join(f"{k} {v:.4f}" for k, v in rates.items())
    assert record(2, spread < 0.02, f"AWGN 12 dB spread {spread:.4f} bit/4D (< 0.02): {detail}")


def test_3_estimator_separation(c, warped_batches):
    # geometry precondition: outer-ring clouds are elongated
    cg = fit(get_kind("2D-CG"), c, warped_batches[0])
    outer = np.flatnonzero(np.isclose(np.sum(c.points ** 2, axis=1), 1.8))
    ev = np.linalg.eigvalsh(cg.covs[:, outer])
    min_ratio = float(np.min(ev[..., -1] / ev[..., 0]))

    est = {k: double_monte_carlo(warped_batches, get_kind(k), "MI", c)
           for k in ("2D-iidG", "2D-CG", "4D-iidG", "4D-CG")}
    r = {k: e.rate for k, e in est.items()}
    se = max(e.stderr for e in est.values())
    gap = r["4D-CG"] - r["2D-iidG"]
    order = (r["4D-CG"] >= max(r["4D-iidG"], r["2D-CG"]) - se
             and min(r["4D-iidG"], r["2D-CG"]) >= r["2D-iidG"] - se)
    ok = min_ratio > 2 and gap >= 0.05 and order
    detail = " ".join(f"{k} {v:.4f}" for k, v in r.items())
    assert record(3, ok, f"outer-ring eigenvalue ratio >= {min_ratio:.2f} (> 2); "
                         f"4D-CG - 2D-iidG = {gap:.3f} (>= 0.05); ordering {order} (se {se:.4f}): {detail}")


def test_4_gmi_sanity(c):
    worst = -math.inf
    for snr in (6.0, 10.0, 12.0, 16.0):
        batch = simulate(c, ChannelScenario("awgn", snr, n=200_000, seed=104))
        train, ev = split_batch(batch, 0.5, 0, 0)
        for name in ("2D-iidG", "GMI-2D", "GMI-4D"):
            model = fit(get_kind(name), c, train)
            worst = max(worst, gmi_rate(ev, model).rate - mi_rate(ev, model).rate)
    order_ok = worst <= 1e-9

    noiseless = noiseless_batch(c, n=256 * 300)
    train, ev = split_batch(noiseless, 0.5, 0, 0)
    dev = 0.0
    for name in FIVE + ["GMI-2D", "GMI-4D"]:
        model = fit(get_kind(name), c, noiseless)
        dev = max(dev, abs(mi_rate(ev, model).rate - 8), abs(gmi_rate(ev, model).rate - 8))
    noiseless_ok = dev < 1e-6

    gaps, oracle_err = {}, 0.0
    for snr in (10.0, 12.0, 14.0):
        sc = ChannelScenario("awgn", snr, n=200_000, seed=105)
        batches = simulate_batches(c, sc, 4)
        mi = double_monte_carlo(batches, get_kind("2D-iidG"), "MI", c).rate
        gmi = double_monte_carlo(batches, get_kind("GMI-2D"), "GMI", c).rate
        assert mi > 6
        gaps[snr] = mi - gmi
        oracle_err = max(oracle_err, abs(gmi - true_gmi_oracle(c, sc)))
    gap_ok = all(g < 0.2 for g in gaps.values())
    ok = order_ok and noiseless_ok and gap_ok and oracle_err < 0.02
    gap_txt = ", ".join(f"{s:g} dB {g:.5f}" for s, g in gaps.items())
    assert record(4, ok, f"max(GMI - MI) matched iid {worst:.2e} (<= 1e-9); noiseless |rate - 8| "
                         f"{dev:.1e} (< 1e-6); MI - GMI {gap_txt} (< 0.2); "
                         f"|GMI - bit-wise oracle| {oracle_err:.4f} (< 0.02)")


def test_5_adaptive_means(c, warped_batches):
    def gain(batches):
        static = double_monte_carlo(batches, get_kind("GMI-4D"), "GMI", c)
        adaptive = double_monte_carlo(batches, get_kind("GMI-4D", "adaptive"), "GMI", c)
        return adaptive.rate - static.rate

    warped = gain(warped_batches)
    awgn = gain(simulate_batches(c, ChannelScenario("awgn", 14.0, n=200_000, seed=106), 4))
    ok = warped >= 0.03 and abs(awgn) < 0.01
    assert record(5, ok, f"GMI-4D adaptive - static: warped {warped:.4f} (>= 0.03), "
                         f"AWGN {awgn:+.4f} (|.| < 0.01)")


def test_6_parameter_estimators_exact(c):
    idx = np.array([0, 0, 1, 1])
    y = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 0.0], [2.0, -2.0]])
    means = conditional_means(idx, y, 2)
    ok_mean = np.array_equal(means, [[2.0, 3.0], [1.0, -1.0]])
    ok_var = pooled_variance(idx, y, means) == 8 / 6
    cov = conditional_covariances(idx, y, means)
    ok_cov = np.array_equal(cov, [[[2, 2], [2, 2]], [[2, -2], [-2, 2]]])

    idx4 = np.array([1, 0, 1, 0])
    y4 = np.array([[1, 0, 2, 4], [0, 0, 0, 0], [3, 2, 0, 0], [2, 2, 2, 2]], float)
    m4 = conditional_means(idx4, y4, 2)
    d0, d1 = np.array([-1, -1, -1, -1.0]), np.array([-1, -1, 1, 2.0])
    ok_4d = (np.array_equal(m4, [[1, 1, 1, 1], [2, 1, 1, 2]])
             and np.array_equal(conditional_covariances(idx4, y4, m4),
                                [2 * np.outer(d0, d0), 2 * np.outer(d1, d1)])
             and pooled_variance(idx4, y4, m4) == 22 / 12)

    table = dof_report(c)
    ok_dof = table == {"2D-iidG": 2, "1D-iidG": 20, "2D-CG": 160, "4D-iidG": 1025, "4D-CG": 3584}
    ok = ok_mean and ok_var and ok_cov and ok_4d and ok_dof
    assert record(6, ok, f"class means {ok_mean}, pooled variance {ok_var}, covariances {ok_cov}, "
                         f"4D fixture {ok_4d}; DoF {list(table.values())}")


def test_7_overfitting_guard(c):
    sc = ChannelScenario("corr_gauss", 12.0, n=20_000, seed=107, rho=0.5, spread=0.3)
    batch = simulate(c, sc)
    kind = get_kind("4D-CG")
    same = double_monte_carlo([batch], kind, "MI", c, split=False, min_samples=10)
    split = double_monte_carlo([batch], kind, "MI", c, split=True, min_samples=10)
    truth = true_rate_oracle(c, sc)
    ok = same.rate > split.rate and split.rate <= truth + 3 * split.stderr
    assert record(7, ok, f"4D-CG N=20000: train=eval {same.rate:.4f} > split {split.rate:.4f}; "
                         f"split <= truth {truth:.4f} + 3 x {split.stderr:.4f}")


def test_8_determinism_and_formats(c, tmp_path):
    sc = ChannelScenario("nl_phase", 14.0, n=50_000, seed=108, gamma=0.03)
    paths = [tmp_path / "a.bin", tmp_path / "b.bin"]
    for p in paths:
        write_batch(simulate(c, sc), p, c)
    same_bytes = paths[0].read_bytes() == paths[1].read_bytes()
    round_trip = read_batch(paths[0]).equals(simulate(c, sc))

    def table():
        rows = rate_sweep([sc], ["2D-iidG", "2D-CG"], ["MI", "GMI"], c, n_batches=2, seed=3)
        return results_to_csv(rows, {"seed": 3})

    same_csv = table() == table()

    data = paths[0].read_bytes()
    head = len(data) - 50_000 * 34
    corrupt = {
        "truncated": data[:head + 1000 * 34 + 5],
        "short": data[:-34],
        "trailing": data + b"\x01",
        "magic": b"BAD!" + data[4:],
        "version": data[:4] + b"\x07\x00" + data[6:],
        "index": data[:head] + b"\xff\xff" + data[head + 2:],
    }
    rejected = {}
    for name, blob in corrupt.items():
        try:
            batch_from_bytes(blob, name)
            rejected[name] = False
        except FormatError as exc:
            rejected[name] = name in str(exc)
    ok = same_bytes and round_trip and same_csv and all(rejected.values())
    assert record(8, ok, f"byte-identical batches {same_bytes}, round trip {round_trip}, "
                         f"identical result CSV {same_csv}; corrupted files rejected "
                         f"{sum(rejected.values())}/{len(rejected)}")
