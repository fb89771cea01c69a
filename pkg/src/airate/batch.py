"""Aligned transmit-index / received-vector records."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True, eq=False)
class SymbolBatch:
    """N pairs ``(x_i, y_i)`` of 4D symbol index and received real 4-vector.

    ``batch_id`` identifies the sample set; a model fitted on a batch
    remembers its id so that evaluation on the same samples is caught.
    """

    tx: np.ndarray
    rx: np.ndarray
    scenario: str = ""
    seed: int | None = None
    batch_id: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        tx = np.ascontiguousarray(self.tx, dtype=np.int64)
        rx = np.ascontiguousarray(self.rx, dtype=np.float64)
        if tx.ndim != 1 or tx.size == 0:
            raise ValueError("tx must be a non-empty 1D index array")
        if rx.shape != (tx.size, 4):
            raise ValueError(f"rx must have shape ({tx.size}, 4), got {rx.shape}")
        if np.any(tx < 0):
            raise ValueError("tx indices must be non-negative")
        if not np.all(np.isfinite(rx)):
            raise ValueError("rx contains non-finite values")
        tx.setflags(write=False)
        rx.setflags(write=False)
        object.__setattr__(self, "tx", tx)
        object.__setattr__(self, "rx", rx)

    @property
    def N(self) -> int:
        return self.tx.size

    def __len__(self):
        return self.tx.size

    def check_indices(self, M4: int):
        bad = np.flatnonzero(self.tx >= M4)
        if bad.size:
            raise ValueError(
                f"tx index {self.tx[bad[0]]} at record {bad[0]} is >= {M4}"
            )

    def take(self, idx, batch_id: str | None = None) -> "SymbolBatch":
        """Sub-batch of the records in `idx` (order preserved as given)."""
        return replace(self, tx=self.tx[idx], rx=self.rx[idx], batch_id=batch_id)

    def equals(self, other: "SymbolBatch") -> bool:
        return (
            np.array_equal(self.tx, other.tx)
            and np.array_equal(self.rx, other.rx)
            and self.scenario == other.scenario
            and self.seed == other.seed
            and self.batch_id == other.batch_id
        )
