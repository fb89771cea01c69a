"""Synthetic memoryless channels for PM-QAM symbol streams.

Scenario kinds
--------------
awgn
    iid Gaussian noise in every real dimension.
corr_gauss
    Zero-mean Gaussian noise with a per-point 4D covariance.
phase_noise
    Independent Gaussian phase rotation per polarization, then AWGN.
nl_phase
    Both polarizations rotated by ``gamma * |s_4D|^2`` plus a common Gaussian
    phase jitter whose std scales with ``|s_4D|^2``, then AWGN. Outer rings blur
    azimuthally and the cloud centres depend on the full 4D symbol.

SNR is the ratio of the average 2D sub-symbol energy (1) to the total 2D
noise variance, so each real dimension gets variance ``10**(-snr/10) / 2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .batch import SymbolBatch
from .constellation import Constellation, symbol_vectors

SCENARIO_KINDS = ("awgn", "corr_gauss", "phase_noise", "nl_phase")
BLOCK = 65536


def noise_variance(snr_db: float) -> float:
    """Per-real-dimension noise variance for a per-2D SNR in dB."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 10.0 ** (-snr_db / 10.0) / 2.0


@dataclass(frozen=True)
class ChannelScenario:
    """Parametric description of a synthetic channel.

    Parameters
    ----------
    kind : str
        One of ``awgn``, ``corr_gauss``, ``phase_noise``, ``nl_phase``.
    snr_db : float
        Per-2D SNR of the additive noise.
    n : int
        Samples per batch.
    seed : int
    rho : float
        corr_gauss: common correlation coefficient between all four dimensions.
    spread : float
        corr_gauss: per-point variance scaling ``1 + spread * (E_j / 2 - 1)``
        with ``E_j`` the 4D point energy.
    phase_std : float
        phase_noise: phase std in rad. nl_phase: jitter std per unit 4D energy.
    gamma : float
        nl_phase: deterministic rotation in rad per unit 4D energy.
    name : str
        Label used in result tables; defaults to a description of the parameters.
    """

    kind: str = "awgn"
    snr_db: float = 12.0
    n: int = 200_000
    seed: int = 0
    rho: float = 0.0
    spread: float = 0.0
    phase_std: float = 0.0
    gamma: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {SCENARIO_KINDS}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"SNR must be a number or +inf, got {self.snr_db}")
        if int(self.n) < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n}")
        if self.kind == "corr_gauss":
            if not -1.0 / 3.0 < self.rho < 1.0:
                raise ValueError(
                    f"rho={self.rho} gives a non-positive-definite 4x4 correlation "
                    "matrix; need -1/3 < rho < 1"
                )
            if self.spread <= -1.0 or self.spread >= 1.0:
                raise ValueError(f"spread must be in (-1, 1), got {self.spread}")
        if self.phase_std < 0:
            raise ValueError("phase_std must be non-negative")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        parts = [self.kind, f"snr={self.snr_db:g}"]
        if self.kind == "corr_gauss":
            parts += [f"rho={self.rho:g}", f"spread={self.spread:g}"]
        if self.kind in ("phase_noise", "nl_phase"):
            parts.append(f"phase_std={self.phase_std:g}")
        if self.kind == "nl_phase":
            parts.append(f"gamma={self.gamma:g}")
        return ",".join(parts)

    def to_text(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "ChannelScenario":
        return cls(**json.loads(text))


def corr_gauss_covariances(c: Constellation, sc: ChannelScenario) -> np.ndarray:
    """True per-point 4D noise covariances of a corr_gauss scenario, shape (M^2, 4, 4)."""
    s4 = symbol_vectors(c, np.arange(c.order ** 2))
    energy = np.sum(s4 ** 2, axis=1)
    scale = 1.0 + sc.spread * (energy / 2.0 - 1.0)
    corr = np.full((4, 4), sc.rho)
    np.fill_diagonal(corr, 1.0)
    return noise_variance(sc.snr_db) * scale[:, None, None] * corr


def _rotate(xy: np.ndarray, phi: np.ndarray) -> np.ndarray:
    cos, sin = np.cos(phi), np.sin(phi)
    return np.column_stack([xy[:, 0] * cos - xy[:, 1] * sin, xy[:, 0] * sin + xy[:, 1] * cos])


def _channel(c, sc, tx, g, chol=None):
    s = symbol_vectors(c, tx)
    n = tx.size
    sigma = math.sqrt(noise_variance(sc.snr_db))
    if sc.kind == "corr_gauss":
        z = g.standard_normal((n, 4))
        return s + np.einsum("nij,nj->ni", chol[tx], z)
    if sc.kind == "phase_noise":
        theta = sc.phase_std * g.standard_normal((n, 2))
        s = np.hstack([_rotate(s[:, :2], theta[:, 0]), _rotate(s[:, 2:], theta[:, 1])])
    elif sc.kind == "nl_phase":
        energy = np.sum(s ** 2, axis=1)
        phi = energy * (sc.gamma + sc.phase_std * g.standard_normal(n))
        s = np.hstack([_rotate(s[:, :2], phi), _rotate(s[:, 2:], phi)])
    return s + sigma * g.standard_normal((n, 4))


def simulate(c: Constellation, sc: ChannelScenario, batch_index: int = 0) -> SymbolBatch:
    """Draw one batch of ``sc.n`` uniformly distributed symbols through the channel.

    Samples are generated in fixed blocks, each from its own random stream
    keyed by (seed, batch_index, block), so output is independent of how
    blocks are scheduled.
    """
    M4 = c.order ** 2
    chol = None
    if sc.kind == "corr_gauss":
        covs = corr_gauss_covariances(c, sc)
        try:
            chol = np.linalg.cholesky(covs) if noise_variance(sc.snr_db) > 0 else np.zeros_like(covs)
        except np.linalg.LinAlgError:
            raise ValueError("corr_gauss covariance specification is not positive definite") from None
    n = int(sc.n)
    tx = np.empty(n, dtype=np.int64)
    rx = np.empty((n, 4))
    for block, lo in enumerate(range(0, n, BLOCK)):
        hi = min(lo + BLOCK, n)
        g = rng.stream(sc.seed, rng.SIMULATE, batch_index, block)
        tx[lo:hi] = g.integers(0, M4, size=hi - lo)
        rx[lo:hi] = _channel(c, sc, tx[lo:hi], g, chol)
    return SymbolBatch(
        tx=tx, rx=rx, scenario=sc.to_text(), seed=sc.seed,
        batch_id=f"{sc.label}#seed{sc.seed}#b{batch_index}",
        meta={"constellation": c.name},
    )


def simulate_batches(c: Constellation, sc: ChannelScenario, count: int) -> list:
    return [simulate(c, sc, b) for b in range(count)]
