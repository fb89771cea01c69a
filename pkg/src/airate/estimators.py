"""Mismatched-decoding rate estimators: symbol-wise MI bound and bit-wise GMI.

All densities are handled in natural log; conversion to bits happens when the
per-sample terms are formed. Per-sample terms are accumulated with
:func:`math.fsum`, so results do not depend on chunking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .batch import SymbolBatch
from .constellation import Constellation
from .models import AuxChannelModel, ModelKind, fit, log_sum_exp, logpdf_all

LN2 = math.log(2.0)
CHUNK = 16384


class OverlapError(ValueError):
    """Evaluation samples are the training samples of the model."""


@dataclass
class RateEstimate:
    """Achievable rate in bit per 4D symbol, averaged over batches."""

    rate: float
    per_batch: list
    sample_counts: list
    estimator: str
    kind: str
    mean_mode: str
    stderr: float = float("nan")
    n_train: int = 0
    n_eval: int = 0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def rate_bit_per_4d(self) -> float:
        return self.rate

    @property
    def negative(self) -> bool:
        """True when mismatch drove the estimate below zero."""
        return self.rate < 0


def _check_disjoint(model: AuxChannelModel, batch: SymbolBatch, allow_overlap: bool):
    if allow_overlap or batch.batch_id is None or model.train_id is None:
        return
    if batch.batch_id == model.train_id:
        raise OverlapError(
            f"evaluation batch {batch.batch_id!r} is the model's training batch; "
            "pass allow_overlap=True to evaluate on training data"
        )


def _check_view(model: AuxChannelModel, view):
    if view is not None and view.d != model.d:
        raise ValueError(f"view dimension {view.d} does not match model dimension {model.d}")


def _split_half_stderr(terms: np.ndarray) -> float:
    h = terms.size // 2
    if h == 0:
        return float("nan")
    r1 = math.fsum(terms[:h]) / h
    r2 = math.fsum(terms[h:]) / (terms.size - h)
    return abs(r1 - r2) / 2.0


def mi_terms(batch: SymbolBatch, model: AuxChannelModel) -> np.ndarray:
    """Per-sample ``log2 q(y|x) / q(y)``, summed over the model's slots."""
    view = model.view
    batch.check_indices(view.constellation.order ** 2)
    sub = view.split(batch.tx)
    log_m = math.log(view.point_count)
    out = np.zeros(batch.N)
    for s in range(view.slots):
        ys = view.slice(batch.rx, s)
        for lo in range(0, batch.N, CHUNK):
            hi = min(lo + CHUNK, batch.N)
            lq = logpdf_all(model, ys[lo:hi], s)
            num = lq[np.arange(hi - lo), sub[lo:hi, s]]
            out[lo:hi] += num - (log_sum_exp(lq) - log_m)
    return out / LN2


def _estimate(terms, estimator, model, batch) -> RateEstimate:
    rate = math.fsum(terms) / terms.size
    n_train = int(model.counts[0].sum()) if model.counts is not None else 0
    return RateEstimate(
        rate=rate, per_batch=[rate], sample_counts=[int(terms.size)],
        estimator=estimator, kind=model.kind.name, mean_mode=model.kind.mean_mode,
        stderr=_split_half_stderr(terms), n_train=n_train, n_eval=int(terms.size),
        seed=batch.seed,
    )


def mi_rate(batch: SymbolBatch, model: AuxChannelModel, view=None,
            allow_overlap: bool = False) -> RateEstimate:
    """Monte-Carlo estimate of the mismatched-decoding MI lower bound.

    The sum over slots gives bit per 4D symbol.
    """
    _check_view(model, view)
    _check_disjoint(model, batch, allow_overlap)
    return _estimate(mi_terms(batch, model), "MI", model, batch)


def _bit_sets(view):
    labels = view.labels.astype(bool)
    for k in range(labels.shape[1]):
        if labels[:, k].all() or not labels[:, k].any():
            raise ValueError(f"bit {k} has an empty 0- or 1-set; labeling is broken")
    return labels


_TINY = 1e-250


def _slot_llrs(model, ys, slot, ones):
    lq = logpdf_all(model, ys, slot)
    # Bit-set sums as one matrix product of max-shifted densities.
    e = np.exp(lq - lq.max(axis=1, keepdims=True))
    s1 = e @ ones.astype(float)
    s0 = e @ (~ones).astype(float)
    with np.errstate(divide="ignore"):
        llr = np.log(s1) - np.log(s0)
    # Rows where a set sum underflowed are redone per bit in the log domain.
    bad = np.flatnonzero(np.any((s1 < _TINY) | (s0 < _TINY), axis=1))
    if bad.size:
        sub = lq[bad]
        for k in range(ones.shape[1]):
            llr[bad, k] = log_sum_exp(sub[:, ones[:, k]]) - log_sum_exp(sub[:, ~ones[:, k]])
    return llr


def compute_llrs(y, model: AuxChannelModel, c: Constellation | None = None,
                 view=None) -> np.ndarray:
    """Per-bit LLRs ``log q(y|b=1) / q(y|b=0)`` of received 4D vector(s).

    Returns shape ``(m,)`` for one vector or ``(n, m)`` for rows of `y`, with
    bits in the order of :func:`airate.constellation.bits_of`.
    """
    _check_view(model, view)
    y_arr = np.asarray(y, dtype=float)
    rows = np.atleast_2d(y_arr)
    if rows.shape[-1] != 4:
        raise ValueError(f"expected 4D received vectors, got shape {y_arr.shape}")
    v = model.view
    ones = _bit_sets(v)
    llr = np.concatenate(
        [_slot_llrs(model, v.slice(rows, s), s, ones) for s in range(v.slots)], axis=1
    )
    return llr[0] if y_arr.ndim == 1 else llr


def gmi_terms(batch: SymbolBatch, model: AuxChannelModel) -> np.ndarray:
    """Per-sample bit-wise information ``sum_k 1 - log2(1 + exp((-1)^b LLR_k))``."""
    v = model.view
    batch.check_indices(v.constellation.order ** 2)
    ones = _bit_sets(v)
    sub = v.split(batch.tx)
    out = np.zeros(batch.N)
    for s in range(v.slots):
        ys = v.slice(batch.rx, s)
        for lo in range(0, batch.N, CHUNK):
            hi = min(lo + CHUNK, batch.N)
            llr = _slot_llrs(model, ys[lo:hi], s, ones)
            bits = v.labels[sub[lo:hi, s]]
            signed = np.where(bits == 1, -llr, llr)
            out[lo:hi] += ones.shape[1] - np.logaddexp(0.0, signed).sum(axis=1) / LN2
    return out


def gmi_rate(batch: SymbolBatch, model: AuxChannelModel, c: Constellation | None = None,
             view=None, allow_overlap: bool = False) -> RateEstimate:
    """GMI estimate in bit per 4D symbol from the model's Gray-labelled LLRs."""
    _check_view(model, view)
    if c is not None and not np.array_equal(c.labels, model.view.constellation.labels):
        raise ValueError("constellation does not match the model's constellation")
    _check_disjoint(model, batch, allow_overlap)
    return _estimate(gmi_terms(batch, model), "GMI", model, batch)


ESTIMATORS = {"MI": mi_rate, "GMI": gmi_rate}


def split_batch(batch: SymbolBatch, split_ratio: float, seed: int, index: int):
    """Seeded random disjoint train/eval split of one batch."""
    if not 0.0 < split_ratio < 1.0:
        raise ValueError(f"split_ratio must be in (0, 1), got {split_ratio}")
    n_train = int(round(split_ratio * batch.N))
    if n_train < 1 or n_train >= batch.N:
        raise ValueError(f"batch of {batch.N} samples cannot be split at {split_ratio}")
    perm = rng.stream(seed, rng.SPLIT, index).permutation(batch.N)
    base = batch.batch_id if batch.batch_id is not None else f"batch{index}"
    train = batch.take(np.sort(perm[:n_train]), batch_id=f"{base}/train")
    evaluation = batch.take(np.sort(perm[n_train:]), batch_id=f"{base}/eval")
    return train, evaluation


def double_monte_carlo(batches, kind: ModelKind, estimator: str, c: Constellation,
                       view=None, split_ratio: float = 0.5, seed: int = 0,
                       split: bool = True, min_samples: int | None = None,
                       mean_mode: str | None = None) -> RateEstimate:
    """Fit on one part of each batch, estimate on the other, average over batches.

    With ``split=False`` the model is fitted and evaluated on the full batch,
    which overestimates the rate; useful only as an overfitting diagnostic.
    """
    estimator = estimator.upper()
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected MI or GMI")
    if isinstance(batches, SymbolBatch):
        batches = [batches]
    if not batches:
        raise ValueError("at least one batch is required")
    kind = kind.with_means(mean_mode)
    if view is not None and view.d != kind.d:
        raise ValueError(f"view dimension {view.d} does not match model dimension {kind.d}")

    per_batch, counts, n_train, single = [], [], 0, None
    for b, batch in enumerate(batches):
        if split:
            train, evaluation = split_batch(batch, split_ratio, seed, b)
        else:
            train = evaluation = batch
        model = fit(kind, c, train, min_samples=min_samples)
        est = ESTIMATORS[estimator](evaluation, model, allow_overlap=not split)
        per_batch.append(est.rate)
        counts.append(est.n_eval)
        n_train += train.N
        single = est

    rate = math.fsum(per_batch) / len(per_batch)
    if len(per_batch) > 1:
        stderr = float(np.std(per_batch, ddof=1) / math.sqrt(len(per_batch)))
    else:
        stderr = single.stderr
    return RateEstimate(
        rate=rate, per_batch=per_batch, sample_counts=counts, estimator=estimator,
        kind=kind.name, mean_mode=kind.mean_mode, stderr=stderr,
        n_train=n_train, n_eval=sum(counts), seed=seed,
        meta={"split": split, "split_ratio": split_ratio},
    )
