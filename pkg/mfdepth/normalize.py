"""
Binwise location and scatter, pointwise whitening of the observations, and the pooled cloud of whitened observations
that global depths are computed against.
"""
import logging

import numpy as np
from scipy.stats import median_abs_deviation

from . import Dataset, InsufficientDataError, pool
from .binning import BinGrid, assign_many
from .util import parallel_map

logger = logging.getLogger(__name__)

default_pool_size = 1000
_candidate_chunk = 512


class BinMoments:
    """
    Per-bin center (p-vector), scatter (p x p) and observation count. ``robust`` records whether the moments come
    from projection pursuit or from the plain sample formulas.
    """

    def __init__(self, means, scatters, counts, robust=False):
        self.means = np.asarray(means, dtype=float)
        self.scatters = np.asarray(scatters, dtype=float)
        self.counts = np.asarray(counts, dtype=int)
        self.robust = bool(robust)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def frame(self) -> np.ndarray:
        """
        Common reference frame ``inv_sqrt`` of the count-weighted average scatter.
        """
        weights = self.counts / self.counts.sum()
        return inv_sqrt(np.einsum("k,kij->ij", weights, self.scatters))

    def whitening_matrices(self) -> np.ndarray:
        """
        One matrix ``W_k`` per bin with ``W_k Q_k W_k^T = I``. ``W_k = inv_sqrt(F Q_k F^T) F`` for the common frame
        F, so a nonsingular linear change of coordinates rotates every bin by the same orthogonal matrix.
        """
        frame = self.frame()
        return np.stack([inv_sqrt(frame @ q @ frame.T) @ frame for q in self.scatters])

    def to_dict(self):
        return dict(
            means=self.means.tolist(),
            scatters=self.scatters.tolist(),
            counts=self.counts.tolist(),
            robust=self.robust,
        )

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["means"], doc["scatters"], doc["counts"], robust=doc.get("robust", False))

    def __repr__(self):
        return "{}.{}(n_bins={}, p={}, robust={})".format(
            self.__module__, self.__class__.__name__, self.n_bins, self.p, self.robust
        )


class NormalizedDataset(Dataset):
    """
    A dataset whose observations were replaced by their whitened values. ``bins[i]`` holds the bin index of each
    observation of curve i.
    """

    def __init__(self, curves, p, bins, moments):
        super().__init__(curves, p=p)
        self.bins = list(bins)
        self.moments = moments


class GlobalPool:
    """
    All whitened observations, optionally restricted to a subsample drawn without replacement.
    """

    def __init__(self, values, subsample=None):
        self.values = np.asarray(values, dtype=float)
        self.subsample = None if subsample is None else np.asarray(subsample, dtype=int)

    @property
    def cloud(self) -> np.ndarray:
        if self.subsample is None:
            return self.values
        return self.values[self.subsample]

    def __len__(self):
        return len(self.values)


def _binned_points(dataset: Dataset, grid: BinGrid):
    pooled = pool(dataset)
    bins = assign_many(grid, pooled.times)
    return [pooled.values[bins == k] for k in range(grid.n_bins)]


def _plain_moments(points):
    mean = points.mean(axis=0)
    scatter = points.T @ points / len(points) - np.outer(mean, mean)
    return mean, (scatter + scatter.T) / 2


def _projection_pursuit(points):
    center = np.median(points, axis=0)
    residual = points - center
    p = points.shape[1]
    directions, variances = [], []
    for _ in range(p):
        norms = np.linalg.norm(residual, axis=1)
        keep = norms > 1e-12 * max(1.0, norms.max())
        if not np.any(keep):
            break
        candidates = residual[keep] / norms[keep, None]
        best_scale, best_direction = -1.0, None
        for start in range(0, len(candidates), _candidate_chunk):
            chunk = candidates[start : start + _candidate_chunk]
            scales = median_abs_deviation(residual @ chunk.T, axis=0, scale="normal") ** 2
            i = int(np.argmax(scales))
            if scales[i] > best_scale:
                best_scale, best_direction = float(scales[i]), chunk[i]
        directions.append(best_direction)
        variances.append(best_scale)
        residual = residual - np.outer(residual @ best_direction, best_direction)
    if len(directions) < p:
        basis = np.array(directions).reshape(-1, p)
        _, _, vt = np.linalg.svd(np.vstack([basis, np.zeros((p - len(basis), p))]))
        for direction in vt[len(basis) :]:
            directions.append(direction)
            variances.append(0.0)
    scatter = sum(v * np.outer(a, a) for v, a in zip(variances, directions))
    return center, (scatter + scatter.T) / 2


def _moments(dataset, grid, estimator, min_points, robust, workers):
    points_by_bin = _binned_points(dataset, grid)
    for k, points in enumerate(points_by_bin):
        if len(points) < min_points:
            raise InsufficientDataError(
                f"Bin {k} holds {len(points)} observation(s), at least {min_points} are needed; merge sparse bins first"
            )
    results = parallel_map(estimator, points_by_bin, workers=workers)
    return BinMoments(
        np.array([m for m, _ in results]),
        np.array([s for _, s in results]),
        [len(points) for points in points_by_bin],
        robust=robust,
    )


def bin_moments(dataset: Dataset, grid: BinGrid, workers=1) -> BinMoments:
    """
    Sample mean and covariance of the observations in each bin. The covariance entries are the mean of the products
    minus the product of the means.
    """
    return _moments(dataset, grid, _plain_moments, 2, False, workers)


def robust_bin_moments(dataset: Dataset, grid: BinGrid, workers=1) -> BinMoments:
    """
    Robust center and scatter of each bin: the coordinatewise median, and a projection-pursuit scatter built from
    the p successive orthogonal directions (taken among the centered sample points) that maximise the squared
    normal-consistent MAD of the projected data.
    """
    return _moments(dataset, grid, _projection_pursuit, dataset.p + 1, True, workers)


def inv_sqrt(cov) -> np.ndarray:
    """
    Inverse symmetric square root of a symmetric matrix. Eigenvalues are floored at ``1e-8 * trace / p``; a zero
    matrix is returned unscaled (identity).
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {cov.shape}")
    scale = max(1.0, float(np.abs(cov).max()))
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-10 * scale):
        raise ValueError("Matrix is not symmetric")
    p = cov.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh((cov + cov.T) / 2)
    trace = float(np.trace(cov))
    floor = 1e-8 * trace / p if trace > 0 else 0.0
    if floor == 0.0 and np.all(eigenvalues <= 0):
        return np.eye(p)
    eigenvalues = np.maximum(eigenvalues, floor)
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def normalize_dataset(dataset: Dataset, grid: BinGrid, moments: BinMoments) -> NormalizedDataset:
    """
    Replace every observation by ``W_k (y - center_k)``, using the center and whitening matrix of its bin.
    """
    if moments.n_bins != grid.n_bins:
        raise ValueError(f"Moments cover {moments.n_bins} bins, the grid has {grid.n_bins}")
    whitening = moments.whitening_matrices()
    curves, bins = [], []
    for curve in dataset.curves:
        curve_bins = assign_many(grid, curve.times)
        centered = curve.values - moments.means[curve_bins]
        bins.append(curve_bins)
        curves.append(np.einsum("tij,tj->ti", whitening[curve_bins], centered))
    normalized = dataset.replace_values(curves)
    return NormalizedDataset(normalized.curves, dataset.p, bins, moments)


def build_pool(normalized: Dataset) -> GlobalPool:
    return GlobalPool(pool(normalized).values)


def default_subsample_size(pool_size: int) -> int:
    return pool_size if pool_size < default_pool_size else default_pool_size


def subsample_pool(global_pool: GlobalPool, n_s=None, seed=0) -> GlobalPool:
    """
    Draw ``n_s`` pooled observations uniformly without replacement (all of them when the pool holds fewer than 1000
    observations and ``n_s`` is not given). Deterministic for a given seed.
    """
    size = len(global_pool)
    if n_s is None:
        n_s = default_subsample_size(size)
    if n_s > size:
        raise ValueError(f"Cannot draw {n_s} observations from a pool of {size}")
    if n_s == size:
        return GlobalPool(global_pool.values, np.arange(size))
    index = np.sort(np.random.default_rng(seed).choice(size, size=n_s, replace=False))
    return GlobalPool(global_pool.values, index)
