"""Ground-truth information rates of the analytically known synthetic channels.

Two independent routes are provided:

* adaptive 1D quadrature (:func:`scipy.integrate.quad`) for square QAM over
  AWGN, which factors into four identical PAM channels;
* tensor-product Gauss-Hermite quadrature for an arbitrary Gaussian mixture
  channel in d dimensions (per-point means and covariances).

Rates are in bit per 4D symbol unless stated otherwise.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, stats
from scipy.stats import qmc
from scipy.special import logsumexp

from . import rng
from .constellation import Constellation, make_view
from .sim import ChannelScenario, corr_gauss_covariances, noise_variance

LN2 = math.log(2.0)


def _pam_integrand(levels, sigma, j):
    a = np.asarray(levels, float)
    delta = a[j] - a

    def f(z):
        # log2 q(y|a_j) - log2 q(y) with y = a_j + z, q(y) averaged over levels
        expo = -((delta + z) ** 2 - z ** 2) / (2 * sigma ** 2)
        return (math.log(a.size) - logsumexp(expo)) / LN2 * math.exp(-z * z / (2 * sigma ** 2))

    return f


def pam_mi(levels, sigma: float) -> float:
    """MI in bit per real dimension of equiprobable PAM over AWGN with std `sigma`."""
    levels = np.asarray(levels, float)
    L = levels.size
    if sigma == 0:
        return math.log2(L)
    norm = 1.0 / (math.sqrt(2 * math.pi) * sigma)
    total = 0.0
    # beyond 12 sigma the Gaussian weight is below 1e-31
    lim = 12.0 * sigma
    for j in range(L):
        breaks = sorted({(levels[k] - levels[j]) / 2 for k in range(L) if k != j})
        breaks = [b for b in breaks if -lim < b < lim]
        val, _ = integrate.quad(_pam_integrand(levels, sigma, j), -lim, lim,
                                points=breaks or None, limit=400,
                                epsabs=1e-12, epsrel=1e-12)
        total += val * norm
    return total / L


def pam_gmi(levels, axis_labels, sigma: float) -> float:
    """Bit-wise GMI in bit per real dimension of labelled PAM over AWGN.

    LLRs use the matched Gaussian metric with the true `sigma`.
    """
    levels = np.asarray(levels, float)
    labels = np.asarray(axis_labels, bool)
    L, m = labels.shape
    if sigma == 0:
        return float(m)
    norm = 1.0 / (math.sqrt(2 * math.pi) * sigma)
    lim = 12.0 * sigma
    total = 0.0
    for j in range(L):
        y0 = levels[j]

        def f(z, j=j):
            y = y0 + z
            lq = -((y - levels) ** 2) / (2 * sigma ** 2)
            loss = 0.0
            for k in range(m):
                llr = logsumexp(lq[labels[:, k]]) - logsumexp(lq[~labels[:, k]])
                sign = -1.0 if labels[j, k] else 1.0
                loss += np.logaddexp(0.0, sign * llr) / LN2
            return (m - loss) * math.exp(-z * z / (2 * sigma ** 2))

        breaks = sorted({(levels[k] - y0) / 2 for k in range(L) if k != j})
        breaks = [b for b in breaks if -lim < b < lim]
        val, _ = integrate.quad(f, -lim, lim, points=breaks or None, limit=400,
                                epsabs=1e-12, epsrel=1e-12)
        total += val * norm
    return total / L


def gauss_hermite_mi(means, covs, nodes: int = 40) -> float:
    """MI in bits of a uniform-input Gaussian mixture channel by product quadrature.

    Parameters
    ----------
    means : array, shape (M, d)
    covs : array, shape (M, d, d)
        Conditional covariance of each input point.
    nodes : int
        Gauss-Hermite nodes per dimension; cost grows as ``M**2 * nodes**d``.
        Converges slowly at high SNR in 4D; prefer :func:`qmc_mixture_mi` there.
    """
    means = np.asarray(means, float)
    covs = np.asarray(covs, float)
    M, d = means.shape
    t, w = np.polynomial.hermite.hermgauss(nodes)
    grid = np.array(list(itertools.product(t, repeat=d))) * math.sqrt(2.0)
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1) / math.pi ** (d / 2)

    chol = np.linalg.cholesky(covs)
    whiten = np.linalg.inv(chol)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    const = -0.5 * d * math.log(2 * math.pi) - 0.5 * logdet
    # E_j[log q_j(Y)] in closed form
    self_term = const - 0.5 * d

    mix = 0.0
    for j in range(M):
        y = means[j] + grid @ chol[j].T
        lq = np.empty((y.shape[0], M))
        for k in range(M):
            z = (y - means[k]) @ whiten[k].T
            lq[:, k] = const[k] - 0.5 * np.einsum("ij,ij->i", z, z)
        mix += weights @ logsumexp(lq, axis=1)
    mix = mix / M - math.log(M)
    return float((np.mean(self_term) - mix) / LN2)


def qmc_mixture_mi(means, covs, points_per_class: int = 2 ** 13, seed: int = 0) -> float:
    """MI in bits of a uniform-input Gaussian mixture channel by quasi-Monte Carlo.

    Each conditional ``N(mu_j, Sigma_j)`` is integrated over the same scrambled
    Sobol point set mapped through the inverse normal CDF, so the result is
    deterministic for a given `seed`. Mixture components too far away to
    contribute more than ``exp(-50)`` relative to the conditional at any node
    are skipped.
    """
    means = np.asarray(means, float)
    covs = np.asarray(covs, float)
    M, d = means.shape
    sobol = qmc.Sobol(d, scramble=True, seed=seed)
    u = stats.norm.ppf(sobol.random(points_per_class))
    r_max = float(np.sqrt((u ** 2).sum(axis=1)).max())

    chol = np.linalg.cholesky(covs)
    prec = np.linalg.inv(covs)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    # log N(y; mu_k, Sigma_k) = c_k + b_k.y - y.P_k.y / 2, evaluated as one matmul
    b = np.einsum("kab,kb->ka", prec, means)
    c0 = (-0.5 * d * math.log(2 * math.pi) - 0.5 * logdet
          - 0.5 * np.einsum("ka,ka->k", b, means))
    coef = np.concatenate([c0[:, None], b, -0.5 * prec.reshape(M, d * d)], axis=1).T
    scale = np.sqrt(np.linalg.eigvalsh(covs)[:, -1])

    total = []
    for j in range(M):
        reach = np.sqrt(r_max ** 2 + np.abs(logdet - logdet[j]) + 100.0)
        dist = np.linalg.norm(means - means[j], axis=1)
        near = np.flatnonzero(dist < r_max * scale[j] + reach * scale)
        y = means[j] + u @ chol[j].T
        feats = np.hstack([np.ones((y.shape[0], 1)), y,
                           (y[:, :, None] * y[:, None, :]).reshape(-1, d * d)])
        lq = feats @ coef[:, near]
        own = (-0.5 * d * math.log(2 * math.pi) - 0.5 * logdet[j]
               - 0.5 * np.einsum("ij,ij->i", u, u))
        total.append(np.mean(logsumexp(lq, axis=1) - own))
    return float(math.log2(M) - math.fsum(total) / M / LN2)


def true_rate_oracle(c: Constellation, sc: ChannelScenario, method: str = "auto",
                     nodes: int | None = None) -> float:
    """True memoryless MI of a synthetic channel, bit per 4D symbol.

    ``method`` selects the route: ``"pam"`` (awgn only, adaptive quadrature of
    the separable PAM channel), ``"gauss_hermite"`` (product quadrature; 2D
    per polarization for awgn, full 4D for corr_gauss), ``"qmc"`` (4D
    quasi-Monte Carlo), or ``"auto"`` (pam for awgn, qmc for corr_gauss).
    """
    if sc.kind not in ("awgn", "corr_gauss"):
        raise ValueError(f"no closed-form conditional density for scenario kind {sc.kind!r}")
    sigma2 = noise_variance(sc.snr_db)
    if method == "auto":
        method = "pam" if sc.kind == "awgn" else "qmc"
    if sigma2 == 0:
        return 2.0 * math.log2(c.order)
    if method == "pam":
        if sc.kind != "awgn" or not c.is_square:
            raise ValueError("the PAM route needs square QAM over awgn")
        return 4.0 * pam_mi(c.levels, math.sqrt(sigma2))
    if method == "gauss_hermite" and sc.kind == "awgn":
        covs = np.broadcast_to(sigma2 * np.eye(2), (c.order, 2, 2))
        return 2.0 * gauss_hermite_mi(c.points, covs, nodes or 48)
    view = make_view(c, 4)
    if sc.kind == "awgn":
        covs = np.broadcast_to(sigma2 * np.eye(4), (view.point_count, 4, 4))
    else:
        covs = corr_gauss_covariances(c, sc)
    if method == "gauss_hermite":
        return gauss_hermite_mi(view.points, covs, nodes or 8)
    if method == "qmc":
        return qmc_mixture_mi(view.points, covs, 2 ** (nodes or 13))
    raise ValueError(f"unknown oracle method {method!r}")


def true_gmi_oracle(c: Constellation, sc: ChannelScenario) -> float:
    """GMI of Gray square QAM over awgn with a matched metric, bit per 4D symbol."""
    if sc.kind != "awgn":
        raise ValueError("the GMI oracle is only available for awgn")
    return 4.0 * pam_gmi(c.levels, c.axis_labels, math.sqrt(noise_variance(sc.snr_db)))


def known_channel_mc(points, sigma: float, n: int, seed: int = 0, chunk: int = 1 << 20):
    """Monte-Carlo MI (bits per use) of iid Gaussian noise with the true density.

    Returns ``(estimate, standard_error)``. Independent of the estimator code
    path: plain numpy, no fitted model.
    """
    points = np.asarray(points, float)
    M, d = points.shape
    g = rng.stream(seed, 99)
    acc, acc2, done = 0.0, 0.0, 0
    while done < n:
        k = min(chunk, n - done)
        x = g.integers(0, M, size=k)
        noise = sigma * g.standard_normal((k, d))
        y = points[x] + noise
        d2 = ((y[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        expo = -(d2 - (noise ** 2).sum(axis=1)[:, None]) / (2 * sigma ** 2)
        terms = (math.log(M) - logsumexp(expo, axis=1)) / LN2
        acc += math.fsum(terms)
        acc2 += math.fsum(terms ** 2)
        done += k
    mean = acc / n
    var = max(acc2 / n - mean ** 2, 0.0)
    return mean, math.sqrt(var / n)
