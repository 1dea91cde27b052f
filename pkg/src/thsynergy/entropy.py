"""Probabilistic entropy and transmission over sparse three-way count tables.

All values are returned in millibits (mbits, 1/1000 bit) with base-2
logarithms.  Probabilities are plain relative frequencies; zero cells are
never stored, which gives the ``0 log 0 = 0`` convention for free.

Sums are evaluated with :func:`math.fsum`, which is exactly rounded, so a
result never depends on the order in which cells were accumulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import AllZero, BadCounts, EmptySubset

MBITS_PER_BIT = 1000.0


class Axis(str, Enum):
    GEOGRAPHY = "geography"
    SIZE = "size"
    TECHNOLOGY = "technology"


AXIS_ORDER = (Axis.GEOGRAPHY, Axis.SIZE, Axis.TECHNOLOGY)


@dataclass(frozen=True)
class CategoryAxis:
    """An ordered set of category labels for one dimension."""

    axis_id: Axis
    labels: tuple[str, ...]
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "axis_id", Axis(self.axis_id))
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError(f"axis {self.axis_id.value} has no categories")
        lookup = {label: i for i, label in enumerate(labels)}
        if len(lookup) != len(labels):
            raise ValueError(f"duplicate labels on axis {self.axis_id.value}")
        object.__setattr__(self, "_lookup", lookup)

    @property
    def cardinality(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._lookup[label]

    def encode(self, labels: Iterable[str]) -> np.ndarray:
        lookup = self._lookup
        return np.fromiter((lookup[label] for label in labels), dtype=np.int64)


def _aggregate(keys: np.ndarray, counts: np.ndarray, size: int):
    """Sum ``counts`` per distinct key; returns (sorted unique keys, sums)."""
    if keys.size == 0:
        return keys.astype(np.int64), counts.astype(np.int64)
    # dense bincount only when the key space is small relative to the data
    if size <= 8 * keys.size + 4096:
        sums = np.bincount(keys, weights=counts, minlength=size)
        nonzero = np.flatnonzero(sums)
        return nonzero.astype(np.int64), np.rint(sums[nonzero]).astype(np.int64)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
    sums = np.add.reduceat(counts[order], starts)
    keep = sums > 0
    return sorted_keys[starts][keep], sums[keep].astype(np.int64)


class ContingencyTensor:
    """Sparse geography x size x technology count table.

    Cells are held as a sorted array of linear cell keys plus a parallel
    array of strictly positive integer counts.
    """

    __slots__ = ("axes", "keys", "counts")

    def __init__(self, axes: Sequence[CategoryAxis], keys, counts):
        axes = tuple(axes)
        if len(axes) != 3:
            raise ValueError("a contingency tensor has exactly three axes")
        if len({a.axis_id for a in axes}) != 3:
            raise ValueError("axes must be three distinct dimensions")
        self.axes = axes
        keys = np.asarray(keys, dtype=np.int64).ravel()
        counts = np.asarray(counts, dtype=np.int64).ravel()
        if keys.shape != counts.shape:
            raise ValueError("keys and counts differ in length")
        if counts.size and counts.min() < 0:
            raise BadCounts("cell counts must be non-negative")
        if keys.size and (keys.min() < 0 or keys.max() >= self.size):
            raise IndexError("cell index outside axis cardinalities")
        self.keys, self.counts = _aggregate(keys, counts, self.size)

    # construction -------------------------------------------------------

    @classmethod
    def from_codes(cls, axes: Sequence[CategoryAxis], codes) -> "ContingencyTensor":
        """One unit count per row of an ``(n, 3)`` integer code array."""
        codes = np.asarray(codes, dtype=np.int64).reshape(-1, 3)
        shape = tuple(a.cardinality for a in axes)
        _check_bounds(codes, shape)
        keys = np.ravel_multi_index(codes.T, shape) if codes.size else codes[:, 0]
        return cls(axes, keys, np.ones(len(keys), dtype=np.int64))

    @classmethod
    def from_cells(
        cls, axes: Sequence[CategoryAxis], cells: Mapping[tuple[int, int, int], int]
    ) -> "ContingencyTensor":
        shape = tuple(a.cardinality for a in axes)
        idx = np.array(list(cells.keys()), dtype=np.int64).reshape(-1, 3)
        _check_bounds(idx, shape)
        keys = np.ravel_multi_index(idx.T, shape) if idx.size else idx[:, 0]
        return cls(axes, keys, np.array(list(cells.values()), dtype=np.int64))

    @classmethod
    def from_dense(cls, array, axes: Sequence[CategoryAxis] | None = None) -> "ContingencyTensor":
        arr = np.asarray(array)
        if arr.ndim != 3:
            raise ValueError("dense tables must be three-dimensional")
        if axes is None:
            axes = [
                CategoryAxis(axis, tuple(str(i) for i in range(n)))
                for axis, n in zip(AXIS_ORDER, arr.shape)
            ]
        flat = arr.ravel()
        nz = np.flatnonzero(flat)
        return cls(axes, nz, flat[nz])

    # views --------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(a.cardinality for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def index(self) -> np.ndarray:
        """``(n_cells, 3)`` array of cell index triples in sorted order."""
        if not self.keys.size:
            return np.zeros((0, 3), dtype=np.int64)
        return np.stack(np.unravel_index(self.keys, self.shape), axis=1).astype(np.int64)

    @property
    def cells(self) -> dict[tuple[int, int, int], int]:
        return {tuple(int(v) for v in row): int(c) for row, c in zip(self.index, self.counts)}

    def position(self, axis) -> int:
        if isinstance(axis, (int, np.integer)) and not isinstance(axis, Axis):
            if not 0 <= axis < 3:
                raise ValueError(f"no axis at position {axis}")
            return int(axis)
        axis = Axis(axis)
        for i, a in enumerate(self.axes):
            if a.axis_id is axis:
                return i
        raise ValueError(f"tensor has no {axis.value} axis")

    def dense(self) -> np.ndarray:
        out = np.zeros(self.size, dtype=np.int64)
        out[self.keys] = self.counts
        return out.reshape(self.shape)

    # algebra ------------------------------------------------------------

    def merge(self, other: "ContingencyTensor") -> "ContingencyTensor":
        """Cellwise sum; commutative and associative."""
        if self.axes != other.axes:
            raise ValueError("cannot merge tensors over different axes")
        return ContingencyTensor(
            self.axes, np.concatenate([self.keys, other.keys]),
            np.concatenate([self.counts, other.counts]),
        )

    def scaled(self, factor: int) -> "ContingencyTensor":
        if int(factor) != factor or factor < 1:
            raise ValueError("scale factor must be a positive integer")
        return ContingencyTensor(self.axes, self.keys, self.counts * int(factor))

    def permuted(self, order: Sequence[int]) -> "ContingencyTensor":
        """Same cells with the axes reordered; ``order[i]`` is the old position of new axis i."""
        order = tuple(order)
        if sorted(order) != [0, 1, 2]:
            raise ValueError("order must be a permutation of (0, 1, 2)")
        idx = self.index[:, order]
        axes = [self.axes[i] for i in order]
        shape = tuple(a.cardinality for a in axes)
        keys = np.ravel_multi_index(idx.T, shape) if idx.size else idx[:, 0]
        return ContingencyTensor(axes, keys, self.counts)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTensor):
            return NotImplemented
        return (
            self.axes == other.axes
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None

    def __repr__(self):
        dims = " x ".join(f"{a.axis_id.value}[{a.cardinality}]" for a in self.axes)
        return f"ContingencyTensor({dims}, cells={self.keys.size}, total={self.total})"


def _check_bounds(idx: np.ndarray, shape) -> None:
    if idx.size and (idx.min() < 0 or np.any(idx.max(axis=0) >= np.asarray(shape))):
        raise IndexError("cell index outside axis cardinalities")


# ---------------------------------------------------------------------------
# entropy and transmission
# ---------------------------------------------------------------------------


def entropy(counts) -> float:
    """Shannon entropy of a count vector, in mbits."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    if c.size and c.min() < 0:
        raise BadCounts("counts must be non-negative")
    c = c[c > 0]
    if not c.size:
        raise AllZero("entropy of an all-zero distribution is undefined")
    p = c / math.fsum(c.tolist())
    return math.fsum((-p * np.log2(p)).tolist()) * MBITS_PER_BIT + 0.0


def _marginal(t: ContingencyTensor, positions: tuple[int, ...]) -> np.ndarray:
    if positions == (0, 1, 2):
        return t.counts
    shape = t.shape
    idx = np.unravel_index(t.keys, shape)
    sub_shape = tuple(shape[p] for p in positions)
    keys = np.ravel_multi_index(tuple(idx[p] for p in positions), sub_shape)
    _, sums = _aggregate(keys, t.counts, math.prod(sub_shape))
    return sums


def marginalize(t: ContingencyTensor, keep) -> dict[tuple[int, ...], int]:
    """Counts summed over the dropped axes, keyed by index tuples of the kept axes.

    Kept axes appear in tensor order regardless of the order of ``keep``.
    """
    positions = tuple(sorted({t.position(a) for a in keep}))
    if not positions:
        raise EmptySubset("keep at least one axis")
    shape = t.shape
    idx = np.unravel_index(t.keys, shape)
    sub_shape = tuple(shape[p] for p in positions)
    keys = np.ravel_multi_index(tuple(idx[p] for p in positions), sub_shape)
    ukeys, sums = _aggregate(keys, t.counts, math.prod(sub_shape))
    out_idx = np.unravel_index(ukeys, sub_shape)
    return {
        tuple(int(axis_idx[i]) for axis_idx in out_idx): int(c)
        for i, c in enumerate(sums)
    }


class EntropyTerms(NamedTuple):
    """The seven entropies entering the three-way transmission (mbits)."""

    h_x: float
    h_y: float
    h_z: float
    h_xy: float
    h_xz: float
    h_yz: float
    h_xyz: float

    def transmission(self) -> float:
        return math.fsum(
            [self.h_x, self.h_y, self.h_z, -self.h_xy, -self.h_xz, -self.h_yz, self.h_xyz]
        ) + 0.0


def entropy_terms(t: ContingencyTensor) -> EntropyTerms:
    if t.total <= 0:
        raise AllZero("tensor holds no records")
    subsets = [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    return EntropyTerms(*(entropy(_marginal(t, s)) for s in subsets))


def transmission2(t: ContingencyTensor, pair) -> float:
    """Bivariate mutual information ``H_a + H_b - H_ab`` for two axes, in mbits."""
    positions = tuple(sorted({t.position(a) for a in pair}))
    if len(positions) != 2:
        raise ValueError("transmission2 needs two distinct axes")
    if t.total <= 0:
        raise AllZero("tensor holds no records")
    a, b = positions
    return math.fsum([
        entropy(_marginal(t, (a,))),
        entropy(_marginal(t, (b,))),
        -entropy(_marginal(t, positions)),
    ]) + 0.0


def transmission3(t: ContingencyTensor) -> float:
    """Signed three-way transmission in mbits; negative values indicate synergy."""
    return entropy_terms(t).transmission()
