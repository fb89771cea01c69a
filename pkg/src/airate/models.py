"""Gaussian auxiliary channels q(y|s_j) and their estimation from training data.

Five model kinds differ in dimension (1, 2 or 4), in whether the Gaussian
centres are the transmitted points (static) or per-point sample means
(adaptive), and in whether the covariance is one pooled variance (iid) or a
full per-point matrix (correlated). A d-dimensional model of a PM signal has
``4 // d`` independent slots, each with its own parameters; rates add over
slots.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constellation import Constellation, SymbolView, make_view

MEAN_MODES = ("static", "adaptive")
COV_MODES = ("iid", "correlated")

#: Relative covariance floor, scaled by the average energy per dimension.
REGULARIZATION = 1e-10


class ModelFitError(ValueError):
    """Raised when an auxiliary channel cannot be estimated from the data."""


@dataclass(frozen=True)
class ModelKind:
    name: str
    d: int
    mean_mode: str
    cov_mode: str

    def __post_init__(self):
        if self.d not in (1, 2, 4):
            raise ValueError(f"model dimension must be 1, 2 or 4, got {self.d}")
        if self.mean_mode not in MEAN_MODES:
            raise ValueError(f"mean_mode must be one of {MEAN_MODES}")
        if self.cov_mode not in COV_MODES:
            raise ValueError(f"cov_mode must be one of {COV_MODES}")

    def with_means(self, mean_mode: str | None) -> "ModelKind":
        """Same kind evaluated with a different mean mode (None keeps it)."""
        if mean_mode is None or mean_mode == self.mean_mode:
            return self
        return replace(self, mean_mode=mean_mode)

    @property
    def adaptive(self) -> bool:
        return self.mean_mode == "adaptive"

    @property
    def correlated(self) -> bool:
        return self.cov_mode == "correlated"


KINDS = {
    "1D-iidG": ModelKind("1D-iidG", 1, "adaptive", "iid"),
    "2D-iidG": ModelKind("2D-iidG", 2, "static", "iid"),
    "2D-CG": ModelKind("2D-CG", 2, "adaptive", "correlated"),
    "4D-iidG": ModelKind("4D-iidG", 4, "adaptive", "iid"),
    "4D-CG": ModelKind("4D-CG", 4, "adaptive", "correlated"),
}

# Bit-wise decoders conventionally assume fixed means and a pooled variance.
GMI_KINDS = {
    "GMI-2D": ModelKind("GMI-2D", 2, "static", "iid"),
    "GMI-4D": ModelKind("GMI-4D", 4, "static", "iid"),
}

ALL_KINDS = {**KINDS, **GMI_KINDS}


def get_kind(name: str, mean_mode: str | None = None) -> ModelKind:
    try:
        kind = ALL_KINDS[name]
    except KeyError:
        raise ValueError(
            f"unknown model kind {name!r}; expected one of {sorted(ALL_KINDS)}"
        ) from None
    return kind.with_means(mean_mode)


def dof(kind: ModelKind, c: Constellation) -> int:
    """Number of estimated parameters of `kind`, totalled over four dimensions."""
    view = make_view(c, kind.d)
    M, d = view.point_count, kind.d
    per_slot = M * d if kind.adaptive else 0
    per_slot += M * d * (d + 1) // 2 if kind.correlated else 1
    return per_slot * view.slots


def dof_report(c: Constellation, kinds=None) -> dict:
    kinds = KINDS.values() if kinds is None else kinds
    return {k.name: dof(k, c) for k in kinds}


# -- per-point estimators ---------------------------------------------------

def conditional_means(idx: np.ndarray, y: np.ndarray, M: int) -> np.ndarray:
    """Per-class sample mean of ``y`` grouped by class index ``idx``.

    Sums are taken relative to the first sample of each class, so a class of
    identical vectors has exactly that vector as its mean. Classes without
    samples get NaN.
    """
    counts = np.bincount(idx, minlength=M).astype(float)
    d = y.shape[1]
    present, first = np.unique(idx, return_index=True)
    ref = np.full((M, d), np.nan)
    ref[present] = y[first]
    dev = y - ref[idx]
    sums = np.column_stack([np.bincount(idx, weights=dev[:, l], minlength=M) for l in range(d)])
    with np.errstate(invalid="ignore", divide="ignore"):
        return ref + sums / counts[:, None]


def pooled_variance(idx: np.ndarray, y: np.ndarray, means: np.ndarray) -> float:
    """Average 1D noise variance, each sample measured from its own class mean.

    Normalized by ``N - 1`` with N the total number of samples.
    """
    dev = y - means[idx]
    n, d = y.shape
    return float(np.sum(dev * dev) / (d * (n - 1)))


def conditional_covariances(idx: np.ndarray, y: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Unbiased per-class sample covariance around ``means[j]``, shape (M, d, d)."""
    M, d = means.shape
    counts = np.bincount(idx, minlength=M)
    dev = y - means[idx]
    cov = np.empty((M, d, d))
    for a in range(d):
        for b in range(a, d):
            s = np.bincount(idx, weights=dev[:, a] * dev[:, b], minlength=M)
            cov[:, a, b] = cov[:, b, a] = s
    with np.errstate(invalid="ignore", divide="ignore"):
        return cov / (counts - 1)[:, None, None]


# -- the fitted model -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AuxChannelModel:
    """Fitted Gaussian auxiliary channel.

    ``means`` has shape (slots, M, d) and ``covs`` shape (slots, M, d, d);
    covariances already include the regularization floor ``eps * I``.
    ``variance`` holds the pooled per-dimension variance of iid kinds.
    """

    kind: ModelKind
    view: SymbolView
    means: np.ndarray
    covs: np.ndarray
    eps: float
    variance: np.ndarray | None = None
    counts: np.ndarray | None = None
    train_id: str | None = None
    # caches
    whiten: np.ndarray | None = None
    logdet: np.ndarray | None = None
    coef: np.ndarray | None = None

    @classmethod
    def from_parameters(cls, kind, view, means, covs, eps, variance=None,
                        counts=None, train_id=None) -> "AuxChannelModel":
        means = np.array(means, dtype=float)
        covs = np.array(covs, dtype=float)
        S, M, d = view.slots, view.point_count, view.d
        if means.shape != (S, M, d) or covs.shape != (S, M, d, d):
            raise ValueError(
                f"parameter shapes {means.shape}/{covs.shape} do not match "
                f"{S} slots x {M} points x d={d}"
            )
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            conds = np.linalg.cond(covs.reshape(-1, d, d)).reshape(S, M)
            s, j = np.unravel_index(np.argmax(conds), conds.shape)
            raise ModelFitError(
                f"covariance of point {j} (slot {s}) is not positive definite "
                f"after regularization; worst condition number {conds[s, j]:.3g}, "
                f"eigenvalues {np.linalg.eigvalsh(covs[s, j])}"
            ) from None
        eye = np.broadcast_to(np.eye(d), chol.shape)
        whiten = np.linalg.solve(chol, eye)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
        coef = _quadratic_coefficients(means, whiten, logdet)
        for arr in (means, covs, whiten, logdet, coef):
            arr.setflags(write=False)
        return cls(kind=kind, view=view, means=means, covs=covs, eps=float(eps),
                   variance=None if variance is None else np.asarray(variance, float),
                   counts=counts, train_id=train_id, whiten=whiten, logdet=logdet,
                   coef=coef)

    @property
    def d(self) -> int:
        return self.kind.d

    @property
    def slots(self) -> int:
        return self.view.slots

    @property
    def point_count(self) -> int:
        return self.view.point_count


def _quadratic_coefficients(means, whiten, logdet):
    """Coefficients of log q(y|s_j) as a linear function of monomial features.

    Features are ``[1, y_a, y_a * y_b (a <= b)]``; see :func:`_features`.
    """
    d = means.shape[-1]
    prec = np.swapaxes(whiten, -1, -2) @ whiten
    lin = np.einsum("smab,smb->sma", prec, means)
    const = (-0.5 * d * np.log(2.0 * np.pi) - 0.5 * logdet
             - 0.5 * np.einsum("sma,sma->sm", means, lin))
    rows, cols = np.triu_indices(d)
    quad = np.where(rows == cols, -0.5, -1.0) * prec[..., rows, cols]
    coef = np.concatenate([const[..., None], lin, quad], axis=-1)
    return np.ascontiguousarray(np.swapaxes(coef, -1, -2))


def _features(y):
    rows, cols = np.triu_indices(y.shape[1])
    return np.hstack([np.ones((y.shape[0], 1)), y, y[:, rows] * y[:, cols]])


def default_min_samples(d: int) -> int:
    return 200 if d == 4 else 50


def regularization_floor(view: SymbolView) -> float:
    energy_per_dim = float(np.mean(np.sum(view.points ** 2, axis=1))) / view.d
    return REGULARIZATION * energy_per_dim


def fit(kind: ModelKind, c: Constellation, train, min_samples: int | None = None) -> AuxChannelModel:
    """Estimate an auxiliary channel of the given kind from a training batch.

    Parameters
    ----------
    kind : ModelKind
    c : Constellation
    train : SymbolBatch
    min_samples : int, optional
        Minimum occurrences required per constellation point when per-point
        parameters are estimated. Defaults to 50 (d <= 2) or 200 (d = 4).

    Raises
    ------
    ModelFitError
        If a point was never transmitted, has too few samples, or a
        covariance is singular after regularization.
    """
    view = make_view(c, kind.d)
    train.check_indices(c.order ** 2)
    S, M, d = view.slots, view.point_count, view.d
    if min_samples is None:
        min_samples = default_min_samples(d)
    per_point = kind.adaptive or kind.correlated
    sub = view.split(train.tx)
    eps = regularization_floor(view)

    means = np.empty((S, M, d))
    covs = np.empty((S, M, d, d))
    counts = np.empty((S, M), dtype=np.int64)
    variance = np.empty(S) if not kind.correlated else None
    for s in range(S):
        idx = sub[:, s]
        ys = view.slice(train.rx, s)
        counts[s] = np.bincount(idx, minlength=M)
        if per_point:
            _check_counts(counts[s], view, s, max(min_samples, 2 if kind.correlated else 1))
        means[s] = conditional_means(idx, ys, M) if kind.adaptive else view.points
        if kind.correlated:
            covs[s] = conditional_covariances(idx, ys, means[s])
        else:
            if idx.size < 2:
                raise ModelFitError("pooled variance needs at least 2 samples")
            variance[s] = pooled_variance(idx, ys, means[s])
            covs[s] = variance[s] * np.eye(d)
        covs[s] += eps * np.eye(d)
    if variance is not None:
        variance = variance + eps
    return AuxChannelModel.from_parameters(
        kind, view, means, covs, eps, variance=variance, counts=counts,
        train_id=train.batch_id,
    )


def _check_counts(counts, view, slot, need):
    empty = np.flatnonzero(counts == 0)
    label = lambda j: "".join(map(str, view.labels[j]))
    if empty.size:
        j = empty[0]
        raise ModelFitError(
            f"constellation point {j} (label {label(j)}, slot {slot}) was never "
            f"transmitted in the training data ({empty.size} empty classes)"
        )
    low = np.flatnonzero(counts < need)
    if low.size:
        j = low[np.argmin(counts[low])]
        raise ModelFitError(
            f"constellation point {j} (label {label(j)}, slot {slot}) has only "
            f"{counts[j]} training samples; at least {need} are required "
            f"({low.size} points below the minimum)"
        )


# -- densities --------------------------------------------------------------

def log_sum_exp(a: np.ndarray) -> np.ndarray:
    """Row-wise ``log(sum(exp(a)))`` of a finite 2D array, shifted by the row max."""
    peak = a.max(axis=1)
    e = np.exp(a - peak[:, None])
    return np.log(e.sum(axis=1)) + peak


def _as_rows(model, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != model.d:
        raise ValueError(f"expected {model.d}-dimensional vectors, got shape {y.shape}")
    return np.atleast_2d(y)


def logpdf_all(model: AuxChannelModel, y, slot: int = 0) -> np.ndarray:
    """``log q(y_i | s_j)`` for all rows of `y` and all points j, shape (n, M).

    Evaluated as one matrix product of monomial features of ``y`` with cached
    per-point coefficients.
    """
    y = _as_rows(model, y)
    return _features(y) @ model.coef[slot]


def logpdf(model: AuxChannelModel, point_index: int, y, slot: int = 0):
    """``log q(y | s_j)`` for one point; scalar for a single vector."""
    y_arr = np.asarray(y, dtype=float)
    rows = _as_rows(model, y_arr)
    j = int(point_index)
    if not 0 <= j < model.point_count:
        raise IndexError(f"point index {j} out of range [0, {model.point_count})")
    z = (rows - model.means[slot, j]) @ model.whiten[slot, j].T
    val = (-0.5 * model.d * np.log(2.0 * np.pi) - 0.5 * model.logdet[slot, j]
           - 0.5 * np.einsum("ij,ij->i", z, z))
    return float(val[0]) if y_arr.ndim == 1 else val


def log_output_density(model: AuxChannelModel, y, slot: int = 0):
    """``log q(y)`` under a uniform prior over the slot's points."""
    y_arr = np.asarray(y, dtype=float)
    lq = log_sum_exp(logpdf_all(model, y_arr, slot)) - np.log(model.point_count)
    return float(lq[0]) if y_arr.ndim == 1 else lq
