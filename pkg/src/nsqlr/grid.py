"""Observation schedules and the interval-overlap structure between them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nsqlr.errors import DataError


@dataclass(frozen=True, eq=False)
class ObservationGrid:
    """Observation times ``0 = S_0 < S_1 < ... < S_M = T`` of one component.

    Interval ``i`` (0-based) is ``(times[i], times[i + 1]]``.
    """

    times: np.ndarray
    component: int = 1

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.size < 2:
            raise DataError(f"component {self.component}: need at least two observation times")
        if t[0] != 0.0:
            raise DataError(f"component {self.component}: first observation time must be 0, got {t[0]!r}")
        if not np.all(np.diff(t) > 0):
            raise DataError(f"component {self.component}: observation times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_intervals(self) -> int:
        return self.times.size - 1

    @property
    def left(self) -> np.ndarray:
        return self.times[:-1]

    @property
    def right(self) -> np.ndarray:
        return self.times[1:]

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def max_interval(self) -> float:
        return float(self.lengths.max())


@dataclass(frozen=True, eq=False)
class OverlapStructure:
    """Sparse list of intervals pairs with positive intersection.

    ``i`` indexes intervals of grid 1, ``j`` intervals of grid 2 (both
    0-based); ``length`` is ``|I_i^1 cap I_j^2|`` and ``g`` the normalized
    value ``length / sqrt(|I_i^1| |I_j^2|)``.  Entries are sorted by ``i``
    then ``j``.
    """

    i: np.ndarray
    j: np.ndarray
    length: np.ndarray
    g: np.ndarray
    shape: tuple

    def dense_g(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.i, self.j] = self.g
        return out

    def __len__(self):
        return self.i.size


def gen_poisson_grid(rate: float, horizon: float, rng: np.random.Generator,
                     component: int = 1) -> ObservationGrid:
    """Arrival times of a homogeneous Poisson process on ``(0, horizon)``.

    The grid is completed with ``0`` and ``horizon`` so that it spans the
    whole observation window.
    """
    if not rate > 0 or not horizon > 0:
        raise ValueError("rate and horizon must be positive")
    count = rng.poisson(rate * horizon)
    # given the count, arrival times are iid uniform order statistics
    arrivals = np.unique(rng.uniform(0.0, horizon, size=count))
    arrivals = arrivals[(arrivals > 0.0) & (arrivals < horizon)]
    return ObservationGrid(np.concatenate(([0.0], arrivals, [horizon])), component)


def build_overlaps(grid1: ObservationGrid, grid2: ObservationGrid) -> OverlapStructure:
    """All pairs ``(i, j)`` with ``|I_i^1 cap I_j^2| > 0``.

    Every elementary segment between consecutive points of the merged time
    set lies in exactly one interval of each grid, and each overlapping pair
    owns exactly one such segment, so the merge enumerates the pairs in order.
    """
    if grid1.horizon != grid2.horizon:
        raise DataError(f"grids end at different horizons: {grid1.horizon!r} vs {grid2.horizon!r}")
    merged = np.union1d(grid1.times, grid2.times)
    ends = merged[1:]
    i = np.searchsorted(grid1.times, ends, side="left") - 1
    j = np.searchsorted(grid2.times, ends, side="left") - 1
    length = np.diff(merged)
    g = np.minimum(length / np.sqrt(grid1.lengths[i] * grid2.lengths[j]), 1.0)
    return OverlapStructure(i, j, length, g, (grid1.n_intervals, grid2.n_intervals))
