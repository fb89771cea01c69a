"""Square QAM constellations with per-axis Gray labels and their 1D/2D/4D views.

A polarization-multiplexed symbol is a real 4-vector ``(x_I, x_Q, y_I, y_Q)``
built from two 2D sub-symbols. Its 4D index is ``ix * M + iy`` with the
X-polarization index ``ix`` as the major digit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def gray_code(n_bits: int) -> np.ndarray:
    """Binary-reflected Gray code as an ``(2**n_bits, n_bits)`` bit array (MSB first)."""
    idx = np.arange(2 ** n_bits)
    code = idx ^ (idx >> 1)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((code[:, None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy 2D constellation with bit labels.

    Attributes
    ----------
    points : ndarray, shape (M, 2)
        Real coordinates ``(I, Q)``; row-major over ascending I then Q amplitude.
    labels : ndarray of uint8, shape (M, log2 M)
        Bit label per point, I-axis Gray bits first.
    levels : ndarray, shape (sqrt(M),)
        Ascending per-axis amplitude levels.
    axis_labels : ndarray of uint8, shape (sqrt(M), log2(M) / 2)
        Gray bits of each amplitude level.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    levels: np.ndarray
    axis_labels: np.ndarray
    dims_per_subsymbol: int = 2

    def __post_init__(self):
        for arr in (self.points, self.labels, self.levels, self.axis_labels):
            arr.setflags(write=False)

    @property
    def order(self) -> int:
        return self.points.shape[0]

    @property
    def bits_per_point(self) -> int:
        return self.labels.shape[1]

    @property
    def bits_per_4d(self) -> int:
        return 2 * self.bits_per_point

    @property
    def is_square(self) -> bool:
        return self.levels.size ** 2 == self.order

    def label_str(self, j: int) -> str:
        return "".join(str(b) for b in self.labels[j])

    def to_text(self) -> str:
        """Plain-text export, one ``index  x  y  label`` line per point."""
        lines = [
            f"{j}  {float(x)!r}  {float(y)!r}  {self.label_str(j)}"
            for j, (x, y) in enumerate(self.points)
        ]
        return "\n".join(lines) + "\n"


def build_qam(order: int, labeling: str = "gray") -> Constellation:
    """Build a unit-energy square QAM constellation with per-axis Gray labels.

    Parameters
    ----------
    order : int
        Number of points; must be an even power of two (4, 16, 64, ...).
    labeling : str
        Only ``"gray"`` is supported.

    Raises
    ------
    ValueError
        If `order` is not an even power of two or `labeling` is unknown.
    """
    if labeling.lower() != "gray":
        raise ValueError(f"unsupported labeling {labeling!r}; only 'gray' is implemented")
    order = int(order)
    m = order.bit_length() - 1
    if order < 4 or (1 << m) != order:
        raise ValueError(f"QAM order must be a power of two >= 4, got {order}")
    if m % 2:
        raise ValueError(
            f"QAM order {order} is not square (log2 M = {m} is odd); "
            "only square QAM is supported"
        )
    n_axis = 1 << (m // 2)
    raw = np.arange(-(n_axis - 1), n_axis, 2, dtype=float)
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    levels = raw / scale
    gray = gray_code(m // 2)

    i_idx, q_idx = np.divmod(np.arange(order), n_axis)
    points = np.column_stack([levels[i_idx], levels[q_idx]])
    labels = np.hstack([gray[i_idx], gray[q_idx]])
    return Constellation(
        name=f"{order}QAM",
        points=points,
        labels=labels,
        levels=levels,
        axis_labels=gray,
    )


def bits_of(c: Constellation, symbol_index_4d) -> np.ndarray:
    """Bits of 4D symbol(s): X-polarization label followed by Y-polarization label.

    Accepts a scalar index (returns shape ``(2m,)``) or an array of indices
    (returns shape ``(..., 2m)``).
    """
    idx = np.asarray(symbol_index_4d)
    M = c.order
    if np.any(idx < 0) or np.any(idx >= M * M):
        raise IndexError(f"4D symbol index out of range [0, {M * M})")
    ix, iy = np.divmod(idx, M)
    return np.concatenate([c.labels[ix], c.labels[iy]], axis=-1)


@dataclass(frozen=True, eq=False)
class SymbolView:
    """The constellation seen as ``4 // d`` independent d-dimensional slots.

    Slot ``s`` covers coordinates ``[s*d, (s+1)*d)`` of the 4D vector.
    """

    constellation: Constellation
    d: int
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def point_count(self) -> int:
        return self.points.shape[0]

    @property
    def slots(self) -> int:
        return 4 // self.d

    @property
    def bits_per_slot(self) -> int:
        return self.labels.shape[1]

    def _digits(self):
        c = self.constellation
        if self.d == 4:
            return (c.order * c.order,)
        if self.d == 2:
            return (c.order, c.order)
        n = c.levels.size
        return (n, n, n, n)

    def split(self, index_4d) -> np.ndarray:
        """Map 4D indices to sub-symbol indices, shape ``(..., slots)``."""
        idx = np.asarray(index_4d, dtype=np.int64)
        total = self.constellation.order ** 2
        if np.any(idx < 0) or np.any(idx >= total):
            raise IndexError(f"4D symbol index out of range [0, {total})")
        return np.stack(np.unravel_index(idx, self._digits()), axis=-1)

    def merge(self, sub_indices) -> np.ndarray:
        """Inverse of :meth:`split`."""
        sub = np.asarray(sub_indices, dtype=np.int64)
        return np.ravel_multi_index(tuple(np.moveaxis(sub, -1, 0)), self._digits())

    def slice(self, rx: np.ndarray, slot: int) -> np.ndarray:
        """Coordinates of `slot` in 4D received vectors ``rx`` of shape (N, 4)."""
        return rx[..., slot * self.d:(slot + 1) * self.d]


def make_view(c: Constellation, d: int) -> SymbolView:
    """Build the d-dimensional view (d in {1, 2, 4}) of a PM constellation."""
    if d not in (1, 2, 4):
        raise ValueError(f"view dimension must be 1, 2 or 4, got {d}")
    if d == 1:
        if not c.is_square:
            raise ValueError("a 1D view requires a square QAM constellation")
        points = c.levels[:, None].copy()
        labels = c.axis_labels.copy()
    elif d == 2:
        points = c.points.copy()
        labels = c.labels.copy()
    else:
        M = c.order
        ix, iy = np.divmod(np.arange(M * M), M)
        points = np.hstack([c.points[ix], c.points[iy]])
        labels = np.hstack([c.labels[ix], c.labels[iy]])
    points.setflags(write=False)
    labels.setflags(write=False)
    return SymbolView(constellation=c, d=d, points=points, labels=labels)


def symbol_vectors(c: Constellation, index_4d) -> np.ndarray:
    """Noise-free 4D vectors of the given 4D symbol indices."""
    ix, iy = np.divmod(np.asarray(index_4d), c.order)
    return np.concatenate([c.points[ix], c.points[iy]], axis=-1)
