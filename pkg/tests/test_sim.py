"""Synthetic channels and the ground-truth oracles."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from airate import (ChannelScenario, SymbolBatch, fit, get_kind, make_view, mi_rate, simulate,
                    true_gmi_oracle, true_rate_oracle)
from airate.constellation import symbol_vectors
from airate.estimators import mi_terms
from airate.io import batch_to_bytes
from airate.oracles import gauss_hermite_mi, known_channel_mc, pam_mi, qmc_mixture_mi
from airate.sim import BLOCK, corr_gauss_covariances, noise_variance

# AWGN MI of Gray 16QAM in bit per 4D symbol from the PAM quadrature, frozen.
AWGN_MI = {6.0: 4.40727, 10.0: 6.32789, 14.0: 7.70605, 18.0: 7.99518}


def test_noise_variance_definition():
    assert noise_variance(12.0) == 10 ** -1.2 / 2
    assert noise_variance(math.inf) == 0.0


def test_noiseless_limit(qam16):
    b = simulate(qam16, ChannelScenario("awgn", math.inf, n=5000, seed=1))
    np.testing.assert_array_equal(b.rx, symbol_vectors(qam16, b.tx))


def test_awgn_noise_variance(qam16):
    b = simulate(qam16, ChannelScenario("awgn", 12.0, n=200_000, seed=2))
    noise = b.rx - symbol_vectors(qam16, b.tx)
    np.testing.assert_allclose(noise.var(axis=0), 10 ** -1.2 / 2, rtol=0.01)
    assert abs(noise.mean()) < 5 * math.sqrt(10 ** -1.2 / 2 / noise.size)


def test_uniform_input_counts(qam16):
    n = 200_000
    b = simulate(qam16, ChannelScenario("awgn", 12.0, n=n, seed=3))
    counts = np.bincount(b.tx, minlength=256)
    p = 1 / 256
    assert np.all(np.abs(counts - n * p) < 5 * math.sqrt(n * p * (1 - p)))


def _outer_ring_ratios(c, batch):
    model = fit(get_kind("2D-CG"), c, batch)
    outer = np.flatnonzero(np.isclose(np.sum(c.points ** 2, axis=1), 1.8))
    ev = np.linalg.eigvalsh(model.covs[:, outer])
    return ev[..., -1] / ev[..., 0]


def test_nl_phase_elongates_outer_ring(qam16):
    nl = simulate(qam16, ChannelScenario("nl_phase", 14.0, n=200_000, seed=4,
                                         gamma=0.03, phase_std=0.05))
    aw = simulate(qam16, ChannelScenario("awgn", 14.0, n=200_000, seed=4))
    assert np.all(_outer_ring_ratios(qam16, nl) > 1.5)
    model = fit(get_kind("2D-CG"), qam16, aw)
    ev = np.linalg.eigvalsh(model.covs)
    assert np.all(ev[..., -1] / ev[..., 0] < 1.1)


def test_nl_phase_rotation_geometry(qam16):
    sc = ChannelScenario("nl_phase", math.inf, n=2000, seed=5, gamma=0.1)
    b = simulate(qam16, sc)
    s = symbol_vectors(qam16, b.tx)
    phi = 0.1 * np.sum(s ** 2, axis=1)
    for p in (0, 2):
        z_tx = s[:, p] + 1j * s[:, p + 1]
        z_rx = b.rx[:, p] + 1j * b.rx[:, p + 1]
        np.testing.assert_allclose(z_rx, z_tx * np.exp(1j * phi), atol=1e-14)


def test_phase_noise_is_a_rotation(qam16):
    sc = ChannelScenario("phase_noise", math.inf, n=100_000, seed=6, phase_std=0.1)
    b = simulate(qam16, sc)
    s = symbol_vectors(qam16, b.tx)
    angles = []
    for p in (0, 2):
        z_tx = s[:, p] + 1j * s[:, p + 1]
        z_rx = b.rx[:, p] + 1j * b.rx[:, p + 1]
        np.testing.assert_allclose(np.abs(z_rx), np.abs(z_tx), rtol=1e-13)
        angles.append(np.angle(z_rx / z_tx))
    angles = np.array(angles)
    np.testing.assert_allclose(angles.std(axis=1), 0.1, rtol=0.02)
    assert abs(np.corrcoef(angles)[0, 1]) < 0.02


def test_corr_gauss_wishart_round_trip(qam16):
    sc = ChannelScenario("corr_gauss", 12.0, n=400_000, seed=7, rho=0.4, spread=0.3)
    b = simulate(qam16, sc)
    model = fit(get_kind("4D-CG"), qam16, b)
    true = corr_gauss_covariances(qam16, sc)
    n = model.counts[0]
    err = np.sum((model.covs[0] - true) ** 2, axis=(1, 2))
    tr = np.trace(true, axis1=1, axis2=2)
    tr2 = np.einsum("jab,jba->j", true, true)
    expected = (tr ** 2 + tr2) / (n - 1)
    ratio = err / expected
    assert 0.85 < ratio.mean() < 1.15
    assert ratio.max() < 8


@pytest.mark.parametrize("kw", [dict(kind="corr_gauss", rho=1.0), dict(kind="corr_gauss", rho=-0.5),
                                dict(kind="corr_gauss", spread=1.0), dict(kind="awgn", phase_std=-1),
                                dict(kind="fiber"), dict(snr_db=float("nan")), dict(n=0)])
def test_invalid_scenarios(kw):
    with pytest.raises(ValueError):
        ChannelScenario(**kw)


def test_scenario_text_round_trip():
    sc = ChannelScenario("nl_phase", 13.5, n=10, seed=3, gamma=0.02, phase_std=0.01, name="x")
    assert ChannelScenario.from_text(sc.to_text()) == sc


def test_determinism_byte_identical(qam16):
    sc = ChannelScenario("nl_phase", 14.0, n=70_000, seed=11, gamma=0.03, phase_std=0.05)
    assert batch_to_bytes(simulate(qam16, sc, 2), qam16) == batch_to_bytes(simulate(qam16, sc, 2), qam16)
    other = simulate(qam16, sc, 3)
    assert not np.array_equal(other.rx, simulate(qam16, sc, 2).rx)


def test_blocks_are_independent_of_length(qam16):
    long = simulate(qam16, ChannelScenario("awgn", 10.0, n=BLOCK + 100, seed=1))
    short = simulate(qam16, ChannelScenario("awgn", 10.0, n=BLOCK, seed=1))
    np.testing.assert_array_equal(long.rx[:BLOCK], short.rx)


# -- oracles ----------------------------------------------------------------

@pytest.mark.parametrize("snr", sorted(AWGN_MI))
def test_awgn_oracle_frozen_values(qam16, snr):
    assert true_rate_oracle(qam16, ChannelScenario("awgn", snr)) == pytest.approx(AWGN_MI[snr], abs=1e-5)


@pytest.mark.parametrize("snr", [6.0, 14.0])
def test_pam_and_gauss_hermite_agree(qam16, snr):
    sc = ChannelScenario("awgn", snr)
    a = true_rate_oracle(qam16, sc, method="pam")
    b = true_rate_oracle(qam16, sc, method="gauss_hermite")
    assert abs(a - b) < 1e-4


def test_oracle_limits(qam16, qpsk):
    for c in (qam16, qpsk):
        assert true_rate_oracle(c, ChannelScenario("awgn", -40.0)) < 1e-3
        assert abs(true_rate_oracle(c, ChannelScenario("awgn", 40.0)) - 2 * math.log2(c.order)) < 1e-3
        assert true_rate_oracle(c, ChannelScenario("awgn", math.inf)) == 2 * math.log2(c.order)
    sc = ChannelScenario("corr_gauss", 35.0, rho=0.3, spread=0.2)
    assert abs(true_rate_oracle(qam16, sc) - 8) < 1e-3


def test_single_pam_level_limit():
    assert pam_mi([-1.0, 1.0], 1e-3) == pytest.approx(1.0, abs=1e-12)
    assert pam_mi([-1.0, 1.0], 1e3) < 1e-6


def test_qpsk_oracle_matches_monte_carlo(qpsk):
    sc = ChannelScenario("awgn", 3.0)
    sigma = math.sqrt(noise_variance(3.0))
    mc, se = known_channel_mc(qpsk.points, sigma, 10_000_000, seed=1)
    truth = true_rate_oracle(qpsk, sc) / 2
    assert abs(mc - truth) < 3 * se


def test_qmc_oracle_matches_awgn_truth(qam16):
    sc = ChannelScenario("corr_gauss", 10.0, rho=0.0, spread=0.0)
    assert abs(true_rate_oracle(qam16, sc) - AWGN_MI[10.0]) < 1e-3


def test_correlated_noise_oracles_agree(qam16):
    # two independent quadratures of the same 2D per-point-covariance mixture
    g = np.random.default_rng(3)
    view = make_view(qam16, 2)
    covs = []
    for _ in range(16):
        a = g.standard_normal((2, 2))
        covs.append(0.02 * (a @ a.T / 2 + 0.5 * np.eye(2)))
    covs = np.array(covs)
    gh = gauss_hermite_mi(view.points, covs, nodes=48)
    qm = qmc_mixture_mi(view.points, covs, 2 ** 15)
    assert abs(gh - qm) < 1e-3


def test_gmi_oracle_below_mi(qam16):
    for snr in (6.0, 10.0, 14.0):
        sc = ChannelScenario("awgn", snr)
        gmi, mi = true_gmi_oracle(qam16, sc), true_rate_oracle(qam16, sc)
        assert gmi <= mi + 1e-9 and mi - gmi < 0.2


def test_oracle_rejects_unknown_density(qam16):
    with pytest.raises(ValueError, match="closed-form"):
        true_rate_oracle(qam16, ChannelScenario("nl_phase", 10.0))
    with pytest.raises(ValueError):
        true_gmi_oracle(qam16, ChannelScenario("corr_gauss", 10.0))
    with pytest.raises(ValueError, match="method"):
        true_rate_oracle(qam16, ChannelScenario("awgn", 10.0), method="simpson")


# -- generate-from-model round trip ------------------------------------------

def _draw_from_model(c, model, n, seed):
    """Samples whose conditional law is exactly the fitted Gaussian model."""
    g = np.random.default_rng(seed)
    view = model.view
    tx = g.integers(0, c.order ** 2, n)
    sub = view.split(tx)
    rx = np.empty((n, 4))
    for s in range(view.slots):
        chol = np.linalg.cholesky(model.covs[s])
        z = g.standard_normal((n, view.d))
        rx[:, s * view.d:(s + 1) * view.d] = (model.means[s][sub[:, s]]
                                               + np.einsum("nab,nb->na", chol[sub[:, s]], z))
    return SymbolBatch(tx=tx, rx=rx, batch_id=f"model-draw-{seed}")


@pytest.fixture(scope="module")
def warped_models(qam16):
    b = simulate(qam16, ChannelScenario("nl_phase", 12.0, n=200_000, seed=13,
                                        gamma=0.03, phase_std=0.05))
    models = {name: fit(get_kind(name), qam16, b) for name in ("2D-CG", "4D-CG")}
    m2, m4 = models["2D-CG"], models["4D-CG"]
    truth = {
        "2D-CG": sum(gauss_hermite_mi(m2.means[s], m2.covs[s], nodes=48) for s in range(2)),
        "4D-CG": qmc_mixture_mi(m4.means[0], m4.covs[0]),
    }
    return models, truth


@pytest.mark.parametrize("n", [10_000, 100_000])
@pytest.mark.parametrize("name", ["2D-CG", "4D-CG"])
def test_generate_from_model_round_trip(qam16, warped_models, name, n):
    models, truths = warped_models
    model, truth = models[name], truths[name]
    batch = _draw_from_model(qam16, model, n, seed=n)
    terms = mi_terms(batch, model)
    se = terms.std(ddof=1) / math.sqrt(n)
    assert abs(mi_rate(batch, model).rate - truth) < 3 * se


@given(st.integers(0, 2 ** 31), st.sampled_from(["awgn", "corr_gauss", "phase_noise", "nl_phase"]))
def test_simulate_properties(seed, kind):
    from airate import build_qam
    c = build_qam(16)
    b = simulate(c, ChannelScenario(kind, 15.0, n=300, seed=seed, rho=0.2, spread=0.1,
                                    phase_std=0.02, gamma=0.01))
    assert b.N == 300 and b.rx.shape == (300, 4)
    assert b.tx.min() >= 0 and b.tx.max() < 256
    assert np.all(np.isfinite(b.rx)) and b.seed == seed
