"""
Empirical-quantile bin grid over the pooled observation times, and the time-density weights derived from it.

Bin ``k`` (0-based) covers ``(b[k], b[k+1]]``; the first bin is closed on both sides. An observation lying exactly on
an interior boundary therefore belongs to the bin on its left.
"""
import logging
from typing import NamedTuple

import numpy as np

from . import Dataset, InsufficientDataError, pool

logger = logging.getLogger(__name__)


class TimeDensity(NamedTuple):
    density: np.ndarray
    lengths: np.ndarray


class BinGrid:
    """
    Partition of the pooled time span into bins, with the number of pooled observations per bin.
    """

    def __init__(self, boundaries, counts, p=1):
        self.boundaries = np.asarray(boundaries, dtype=float)
        self.counts = np.asarray(counts, dtype=int)
        self.p = int(p)
        if len(self.boundaries) != len(self.counts) + 1:
            raise ValueError("Expected one more boundary than bins")
        if np.any(np.diff(self.boundaries) < 0):
            raise ValueError("Bin boundaries must be nondecreasing")
        self.boundaries.flags.writeable = False
        self.counts.flags.writeable = False

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def span(self):
        return float(self.boundaries[0]), float(self.boundaries[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def midpoints(self) -> np.ndarray:
        return (self.boundaries[:-1] + self.boundaries[1:]) / 2

    @property
    def empty_fraction(self) -> float:
        """
        Fraction of bins without any observation. A large value means the subjects' time windows barely overlap.
        """
        return float(np.mean(self.counts == 0)) if self.n_bins else 0.0

    def to_dict(self):
        return dict(boundaries=self.boundaries.tolist(), counts=self.counts.tolist(), p=self.p)

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["boundaries"], doc["counts"], p=doc.get("p", 1))

    def __eq__(self, other):
        return (
            isinstance(other, BinGrid)
            and np.array_equal(self.boundaries, other.boundaries)
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self):
        return "{}.{}(n_bins={}, span={})".format(self.__module__, self.__class__.__name__, self.n_bins, self.span)


def _bin_index(boundaries, times):
    index = np.searchsorted(boundaries, times, side="left") - 1
    return np.clip(index, 0, len(boundaries) - 2)


def quantile_boundaries(times, n_bins) -> np.ndarray:
    """
    Left-continuous inverse of the empirical cdf of ``times`` at levels ``j / n_bins``, with the outer boundaries
    pinned to the smallest and largest time. Indices are computed in integer arithmetic.
    """
    ordered = np.sort(np.asarray(times, dtype=float))
    n = len(ordered)
    index = [-(-j * n // n_bins) - 1 for j in range(1, n_bins)]
    return np.concatenate([[ordered[0]], ordered[index], [ordered[-1]]])


def build_grid(dataset: Dataset, n_bins="auto") -> BinGrid:
    """
    Build the bin grid whose separation points are the empirical quantiles (left-continuous inverse) of the pooled
    observation times at levels ``j / n_bins``. With ``n_bins="auto"`` the number of bins is the rounded mean number
    of observations per curve.
    """
    times = pool(dataset).times
    if len(times) == 0:
        raise InsufficientDataError("Cannot build a bin grid without observations")
    if n_bins == "auto" or n_bins is None:
        n_bins = max(1, int(round(len(times) / len(dataset))))
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ValueError(f"n_bins must be positive, got {n_bins}")
    if len(times) < n_bins:
        raise InsufficientDataError(f"{len(times)} observations are not enough for {n_bins} bins")
    if times.min() == times.max():
        raise InsufficientDataError("All observation times are identical; the time span has zero length")
    boundaries = quantile_boundaries(times, n_bins)
    counts = np.bincount(_bin_index(boundaries, times), minlength=n_bins)
    grid = BinGrid(boundaries, counts, p=dataset.p)
    if grid.empty_fraction > 0:
        logger.warning("%.1f%% of the %d time bins are empty", 100 * grid.empty_fraction, grid.n_bins)
    return grid


def assign_many(grid: BinGrid, times) -> np.ndarray:
    """
    Bin index of each time. Times outside the grid span are clamped to the first or last bin with a warning.
    """
    times = np.asarray(times, dtype=float)
    lo, hi = grid.span
    outside = (times < lo) | (times > hi)
    if np.any(outside):
        logger.warning("%d time(s) outside the bin grid span [%g, %g] clamped", int(outside.sum()), lo, hi)
    return _bin_index(grid.boundaries, times)


def assign(grid: BinGrid, t: float) -> int:
    return int(assign_many(grid, np.array([t]))[0])


def effective_lengths(grid: BinGrid) -> np.ndarray:
    """
    Bin lengths, except that a zero-length bin holding observations (a tie of the pooled times at a quantile, such
    as the first time of a common grid) takes the length of its nearest neighbour with positive length.
    """
    lengths = grid.lengths.copy()
    positive = np.flatnonzero(lengths > 0)
    if len(positive) == 0:
        return lengths
    for k in np.flatnonzero((lengths == 0) & (grid.counts > 0)):
        nearest = positive[np.argmin(np.abs(positive - k) * 2 + (positive > k))]
        lengths[k] = grid.lengths[nearest]
    return lengths


def time_density(grid: BinGrid) -> TimeDensity:
    """
    Empirical time density per bin, ``g_k = d_k / sum(d)``, with the effective bin lengths.
    """
    total = grid.counts.sum()
    density = grid.counts / total if total else np.zeros(grid.n_bins)
    return TimeDensity(density, effective_lengths(grid))


def merge_sparse(grid: BinGrid, min_count: int) -> BinGrid:
    """
    Greedily merge bins holding fewer than ``min_count`` observations into their smaller-count neighbour until every
    bin reaches the floor. Observation counts are conserved.
    """
    if min_count < grid.p + 1:
        raise ValueError(f"min_count must be at least p + 1 = {grid.p + 1}, got {min_count}")
    counts = list(grid.counts)
    boundaries = list(grid.boundaries)
    if sum(counts) < min_count:
        raise InsufficientDataError(f"{sum(counts)} observations in total, fewer than min_count={min_count}")
    merges = 0
    while len(counts) > 1:
        undersized = [k for k, c in enumerate(counts) if c < min_count]
        if not undersized:
            break
        k = min(undersized, key=lambda i: (counts[i], i))
        if k == 0:
            neighbour = 1
        elif k == len(counts) - 1:
            neighbour = k - 1
        else:
            neighbour = k - 1 if counts[k - 1] <= counts[k + 1] else k + 1
        left = min(k, neighbour)
        counts[left : left + 2] = [counts[left] + counts[left + 1]]
        del boundaries[left + 1]
        merges += 1
    if merges:
        logger.debug("Merged %d sparse bins, %d bins remain", merges, len(counts))
    return BinGrid(boundaries, counts, p=grid.p)


def default_min_count(p: int) -> int:
    return max(p + 1, 5)


def prepare_grid(dataset: Dataset, n_bins="auto", min_count=None) -> BinGrid:
    """
    Build the quantile grid and merge undersized bins so that every bin can carry a multivariate depth.
    """
    grid = build_grid(dataset, n_bins)
    if min_count is None:
        min_count = default_min_count(dataset.p)
    return merge_sparse(grid, min_count)
