"""Unit-hypercube spaces under the max-metric and their per-epoch grid partitions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

Point = Tuple[float, ...]

# 2**i must fit a signed 64-bit slot counter
MAX_EPOCH = 62


def epoch_length(i: int) -> int:
    """Number of slots in epoch ``i`` (2**i)."""
    if i < 0:
        raise ValueError(f"epoch index must be non-negative, got {i}")
    if i > MAX_EPOCH:
        raise OverflowError(f"epoch {i} exceeds the supported range (max {MAX_EPOCH})")
    return 1 << i


def nominal_radius(i: int, alpha: float) -> float:
    """Cluster radius prescribed for epoch ``i``: (2**i) ** -alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(epoch_length(i)) ** (-alpha)


def dist_inf(p: Sequence[float], q: Sequence[float]) -> float:
    return max(abs(a - b) for a, b in zip(p, q))


@dataclass(frozen=True)
class Partition:
    """Uniform grid over [0, 1]**dimension.

    Cells are indexed row-major with axis 0 as the major axis.
    """

    dimension: int
    cells_per_axis: int
    nominal_radius: float

    @property
    def cluster_count(self) -> int:
        return self.cells_per_axis**self.dimension

    @property
    def side(self) -> float:
        return 1.0 / self.cells_per_axis

    @property
    def cell_radius(self) -> float:
        # half the max-metric diameter of a cell
        return 0.5 * self.side

    def axis_cells(self, index: int) -> Tuple[int, ...]:
        if not 0 <= index < self.cluster_count:
            raise IndexError(f"cluster index {index} out of range [0, {self.cluster_count})")
        n = self.cells_per_axis
        cells = []
        for _ in range(self.dimension):
            index, j = divmod(index, n)
            cells.append(j)
        return tuple(reversed(cells))

    def bounds(self, index: int) -> Tuple[Point, Point]:
        """Lower and upper corners of a cell."""
        side = self.side
        cells = self.axis_cells(index)
        return tuple(j * side for j in cells), tuple((j + 1) * side for j in cells)


def build_partition(dimension: int, target_radius: float) -> Partition:
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    if target_radius <= 0:
        raise ValueError(f"target radius must be positive, got {target_radius}")
    # the tiny slack keeps exact ratios such as 1/(2*0.25) from rounding up to 3
    cells = max(1, math.ceil(1.0 / (2.0 * target_radius) - 1e-12))
    return Partition(dimension=dimension, cells_per_axis=cells, nominal_radius=target_radius)


def locate(p: Sequence[float], part: Partition) -> int:
    n = part.cells_per_axis
    last = n - 1
    index = 0
    for c in p:
        j = int(c * n)
        if j > last:
            j = last
        index = index * n + j
    return index


def cluster_center(index: int, part: Partition) -> Point:
    side = part.side
    return tuple((j + 0.5) * side for j in part.axis_cells(index))


def validate_point(p: Sequence[float], dimension: int) -> Point:
    if len(p) != dimension:
        raise ValueError(f"point has {len(p)} coordinates, expected {dimension}")
    if any(not 0.0 <= c <= 1.0 for c in p):
        raise ValueError(f"point {tuple(p)} lies outside the unit hypercube")
    return tuple(float(c) for c in p)
