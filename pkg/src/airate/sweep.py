"""Model-comparison tables over scenarios, model kinds and estimators."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor

from .constellation import Constellation
from .estimators import double_monte_carlo
from .models import GMI_KINDS, get_kind
from .sim import simulate_batches

log = logging.getLogger(__name__)


def plan_evaluations(kinds, estimators) -> list:
    """Pair estimators with model kinds.

    MI is evaluated for every requested Table-1 kind. GMI is evaluated for the
    requested GMI kinds, or for both GMI-2D and GMI-4D when none is listed.
    """
    kinds = [get_kind(k) if isinstance(k, str) else k for k in kinds]
    estimators = [e.upper() for e in estimators]
    plan = []
    if "MI" in estimators:
        plan += [(k, "MI") for k in kinds if k.name not in GMI_KINDS]
    if "GMI" in estimators:
        gmi = [k for k in kinds if k.name in GMI_KINDS] or list(GMI_KINDS.values())
        plan += [(k, "GMI") for k in gmi]
    return plan


def _row(label, kind, est, result=None, error=None):
    row = {"scenario": label, "model": kind.name, "estimator": est,
           "mean_mode": kind.mean_mode, "n_train": 0, "n_eval": 0,
           "rate": math.nan, "stderr": math.nan, "seed": None}
    if result is not None:
        row.update(n_train=result.n_train, n_eval=result.n_eval, rate=result.rate,
                   stderr=result.stderr, seed=result.seed, estimate=result)
    if error is not None:
        row["error"] = error
    return row


def evaluate_batches(batches, plan, c: Constellation, label: str = "", split_ratio=0.5,
                     seed=0, mean_mode=None, min_samples=None) -> list:
    """Run every ``(kind, estimator)`` of `plan` on the same batches.

    A failing pair produces a row with ``rate = nan`` and an ``error`` message
    instead of aborting the table.
    """
    rows = []
    for kind, est in plan:
        kind = kind.with_means(mean_mode)
        try:
            res = double_monte_carlo(batches, kind, est, c, split_ratio=split_ratio,
                                     seed=seed, min_samples=min_samples)
        except (ValueError, ArithmeticError) as exc:
            log.warning("%s %s/%s failed: %s", label, kind.name, est, exc)
            rows.append(_row(label, kind, est, error=str(exc)))
        else:
            rows.append(_row(label, kind, est, res))
    return rows


def _scenario_rows(args):
    c, sc, plan, n_batches, split_ratio, seed, mean_mode, min_samples = args
    batches = simulate_batches(c, sc, n_batches)
    return evaluate_batches(batches, plan, c, sc.label, split_ratio, seed, mean_mode, min_samples)


def rate_sweep(scenarios, kinds, estimators, c: Constellation, n_batches: int = 4,
               split_ratio: float = 0.5, seed: int = 0, mean_mode: str | None = None,
               jobs: int = 1, min_samples: int | None = None) -> list:
    """Evaluate all (scenario, kind, estimator) combinations.

    Each scenario's batches are generated once and shared by every model, and
    the train/eval split is keyed by `seed` only, so all models of a scenario
    see identical samples. Rows come back in scenario order, then plan order,
    whatever the number of worker processes.
    """
    plan = plan_evaluations(kinds, estimators)
    work = [(c, sc, plan, n_batches, split_ratio, seed, mean_mode, min_samples) for sc in scenarios]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_scenario_rows, work))
    else:
        chunks = [_scenario_rows(w) for w in work]
    return [row for chunk in chunks for row in chunk]


def failures(rows) -> list:
    return [(r["scenario"], r["model"], r["estimator"], r["error"]) for r in rows if "error" in r]


def parse_grid(text: str) -> list:
    """Parse ``start:step:stop`` (inclusive) or a comma-separated list of numbers."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise ValueError(f"grid {text!r} must be start:step:stop with step > 0")
        start, step, stop = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(p) for p in text.split(",") if p.strip()]

