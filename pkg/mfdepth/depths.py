"""
Integrated and extremal multivariate functional depths for irregularly observed curves.

Six methods are available, selected by :class:`Method`:

- ``LMFID_wt``, ``LMFID_wd``, ``LMFED``: local depths. Every observation is ranked against the point cloud of its own
  time bin.
- ``GMFID_wt``, ``GMFID_wd``, ``GMFED``: global depths. Observations are whitened binwise first, then ranked against
  one pooled (and by default subsampled) cloud of whitened observations.

The ``wt`` variants weight bins by time density and bin length, the ``wd`` variants by the volume of the central
depth region (``beta = 1/4`` by default) and bin length. Extremal depths order curves by their depth cdfs, giving
priority to low pointwise depths.
"""
import functools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.stats import rankdata

from . import Dataset, InsufficientDataError, pool
from .binning import BinGrid, assign_many, effective_lengths, prepare_grid, time_density
from .halfspace import default_n_dirs, halfspace_depth, region_volume
from .normalize import (
    BinMoments,
    GlobalPool,
    NormalizedDataset,
    bin_moments,
    build_pool,
    normalize_dataset,
    robust_bin_moments,
    subsample_pool,
)
from .util import derive_seed, parallel_map

logger = logging.getLogger(__name__)

Method = Enum("Method", "GMFID_wt GMFID_wd GMFED LMFID_wt LMFID_wd LMFED")

Extremity = Enum("Extremity", "more_extreme equivalent less_extreme")

global_methods = {Method.GMFID_wt, Method.GMFID_wd, Method.GMFED}
extremal_methods = {Method.GMFED, Method.LMFED}
region_methods = {Method.GMFID_wd, Method.LMFID_wd}

cdf_tolerance = 1e-12
default_beta = 0.25


def parse_method(name: Union[str, Method]) -> Method:
    if isinstance(name, Method):
        return name
    for method in Method:
        if method.name.lower() == str(name).strip().lower():
            return method
    raise ValueError(f"Unknown depth method {name!r}, expected one of {', '.join(m.name for m in Method)}")


class PointwiseDepths:
    """
    Pointwise depth of every observation, grouped per curve: ``times[i]``, ``bins[i]`` and ``values[i]`` are aligned
    arrays for curve ``ids[i]``. ``mode`` is ``"local"`` or ``"global"``.
    """

    def __init__(self, ids, times, bins, values, mode, n_bins):
        self.ids = list(ids)
        self.times = list(times)
        self.bins = list(bins)
        self.values = list(values)
        self.mode = mode
        self.n_bins = int(n_bins)

    def curve(self, i):
        return [(float(t), int(k), float(d)) for t, k, d in zip(self.times[i], self.bins[i], self.values[i])]

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return "{}.{}(mode={}, N={})".format(self.__module__, self.__class__.__name__, self.mode, len(self))


def _split_by_curve(dataset, flat):
    offsets = np.cumsum([len(c) for c in dataset.curves])[:-1]
    return np.split(np.asarray(flat), offsets)


def bin_clouds(dataset: Dataset, grid: BinGrid) -> List[np.ndarray]:
    """
    The observations falling in each bin, as one (n_k, p) array per bin.
    """
    pooled = pool(dataset)
    bins = assign_many(grid, pooled.times)
    return [pooled.values[bins == k] for k in range(grid.n_bins)]


def pointwise_local(dataset: Dataset, grid: BinGrid, n_dirs=default_n_dirs, seed=0, workers=1) -> PointwiseDepths:
    """
    Depth of each observation against the cloud of its own bin (the observation included). Empty bins are skipped;
    a nonempty bin holding fewer than p + 1 observations is an error.
    """
    pooled = pool(dataset)
    bins = assign_many(grid, pooled.times)
    depths = np.zeros(len(pooled))
    occupied = [k for k in range(grid.n_bins) if np.any(bins == k)]
    for k in occupied:
        n_k = int(np.sum(bins == k))
        if n_k < dataset.p + 1:
            raise InsufficientDataError(
                f"Bin {k} holds {n_k} observation(s), a local depth needs at least p + 1 = {dataset.p + 1}"
            )

    def bin_depths(k):
        cloud = pooled.values[bins == k]
        return halfspace_depth(cloud, cloud, n_dirs=n_dirs, seed=derive_seed(seed, "local", k))

    for k, values in zip(occupied, parallel_map(bin_depths, occupied, workers=workers)):
        depths[bins == k] = values
    return PointwiseDepths(
        dataset.ids,
        [c.times for c in dataset.curves],
        _split_by_curve(dataset, bins),
        _split_by_curve(dataset, depths),
        "local",
        grid.n_bins,
    )


def pointwise_global(
    dataset: Dataset,
    grid: BinGrid,
    moments: BinMoments,
    global_pool: Optional[GlobalPool] = None,
    n_dirs=default_n_dirs,
    seed=0,
) -> PointwiseDepths:
    """
    Depth of each whitened observation against the pooled cloud of whitened observations (its subsample when
    ``global_pool`` carries one). Without a pool the full normalized data is used.
    """
    if isinstance(dataset, NormalizedDataset):
        normalized = dataset
    else:
        normalized = normalize_dataset(dataset, grid, moments)
    if global_pool is None:
        global_pool = build_pool(normalized)
    queries = pool(normalized).values
    depths = halfspace_depth(queries, global_pool.cloud, n_dirs=n_dirs, seed=derive_seed(seed, "global"))
    return PointwiseDepths(
        normalized.ids,
        [c.times for c in normalized.curves],
        normalized.bins,
        _split_by_curve(normalized, depths),
        "global",
        grid.n_bins,
    )


def lattice_depths(pw: PointwiseDepths, grid: BinGrid) -> PointwiseDepths:
    """
    Move global pointwise depths onto the values a local depth can take in the observation's bin: with ``d_k``
    observations in bin ``k`` the depth is rounded up to a multiple of ``1 / d_k``, and never falls below
    ``1 / d_k`` (the observation itself).
    """
    values = []
    for bins, depths in zip(pw.bins, pw.values):
        counts = np.maximum(grid.counts[np.asarray(bins, dtype=int)], 1)
        steps = np.maximum(1, np.ceil(counts * np.asarray(depths, dtype=float) - cdf_tolerance))
        values.append(np.minimum(steps / counts, 1.0))
    return PointwiseDepths(pw.ids, pw.times, pw.bins, values, pw.mode, pw.n_bins)


def _normalized(weights):
    weights = np.asarray(weights, dtype=float)
    return weights / weights.sum()


def weights_time(grid: BinGrid) -> np.ndarray:
    """
    Time-density weights ``w_k ∝ g_k * length_k``, summing to 1. Falls back to the time density alone when every
    occupied bin has zero length.
    """
    density = time_density(grid)
    weights = density.density * density.lengths
    if weights.sum() <= 0:
        return _normalized(density.density)
    return _normalized(weights)


def weights_region(
    grid: BinGrid, clouds, beta=default_beta, n_dirs=default_n_dirs, seed=0, workers=1
) -> np.ndarray:
    """
    Depth-region weights ``w_k ∝ vol(D_beta,k) * length_k``.

    The spacing ``length_k`` is the bin's own effective length, not the gap between the separation points on either
    side of it. ``clouds`` holds one point cloud per bin (local mode) or a single pooled cloud shared by every bin
    (global mode, where the common volume cancels). Bins whose cloud has fewer than p + 1 points get volume 0. When
    every volume is zero the time-density weights are returned.
    """
    if len(clouds) == 1:
        volume = region_volume(clouds[0], beta, n_dirs=n_dirs, seed=derive_seed(seed, "region"))
        volumes = np.full(grid.n_bins, volume)
    else:
        if len(clouds) != grid.n_bins:
            raise ValueError(f"Expected {grid.n_bins} bin clouds, got {len(clouds)}")

        def volume_of(k):
            cloud = np.asarray(clouds[k], dtype=float).reshape(-1, grid.p)
            if len(cloud) < cloud.shape[1] + 1:
                return 0.0
            return region_volume(cloud, beta, n_dirs=n_dirs, seed=derive_seed(seed, "region", k))

        volumes = np.array(parallel_map(volume_of, range(grid.n_bins), workers=workers))
    weights = volumes * effective_lengths(grid)
    if not weights.sum() > 0:
        logger.warning("All depth-region volumes are zero; using time-density weights instead")
        return weights_time(grid)
    return _normalized(weights)


class DepthReport:
    """
    Scalar depth per curve for one method, with ranks (1 = deepest, ties averaged). Curves whose observed bins
    carry no weight are unrankable: their depth is NaN and they rank below every other curve.
    """

    def __init__(self, ids, depths, method: Method, beta=None, pointwise: Optional[PointwiseDepths] = None):
        self.ids = list(ids)
        self.depths = np.asarray(depths, dtype=float)
        self.method = parse_method(method)
        self.beta = beta
        self.pointwise = pointwise
        self._ranks = None

    @property
    def ranks(self) -> np.ndarray:
        if self._ranks is None:
            self._ranks = rank(self)
        return self._ranks

    @property
    def unrankable(self) -> List[str]:
        return [i for i, d in zip(self.ids, self.depths) if np.isnan(d)]

    def depth_of(self, curve_id) -> float:
        return float(self.depths[self.ids.index(curve_id)])

    def deepest(self, k=1) -> List[str]:
        order = sorted(range(len(self.ids)), key=lambda i: (self.ranks[i], self.ids[i]))
        return [self.ids[i] for i in order[:k]]

    def shallowest(self, k=1) -> List[str]:
        order = sorted(range(len(self.ids)), key=lambda i: (-self.ranks[i], self.ids[i]))
        return [self.ids[i] for i in order[:k]]

    @property
    def median_id(self) -> str:
        return self.deepest(1)[0]

    def to_rows(self):
        for curve_id, depth, r in zip(self.ids, self.depths, self.ranks):
            yield dict(id=curve_id, method=self.method.name, depth=float(depth), rank=float(r))

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return "{}.{}({}, N={})".format(self.__module__, self.__class__.__name__, self.method.name, len(self))


def rank(report: DepthReport) -> np.ndarray:
    """
    Ranks in decreasing depth order, ties averaged. NaN depths rank last.
    """
    depths = np.where(np.isnan(report.depths), np.inf, -report.depths)
    return rankdata(depths, method="average")


def _curve_weight(bins, weights):
    occupied = np.unique(bins)
    return float(np.sum(weights[occupied]))


def integrated_depth(pw: PointwiseDepths, weights, method: Method, beta=None) -> DepthReport:
    """
    Weighted average over the curve's observed bins of the mean in-bin pointwise depth, with the weights
    renormalized over those bins.
    """
    weights = np.asarray(weights, dtype=float)
    depths = np.full(len(pw), np.nan)
    for i, (bins, values) in enumerate(zip(pw.bins, pw.values)):
        if len(bins) == 0:
            continue
        counts = np.bincount(bins, minlength=pw.n_bins)
        sums = np.bincount(bins, weights=values, minlength=pw.n_bins)
        observed = counts > 0
        total = weights[observed].sum()
        if total <= 0:
            continue
        depths[i] = min(1.0, max(0.0, float(np.sum(sums[observed] / counts[observed] * weights[observed]) / total)))
    if np.any(np.isnan(depths)):
        logger.warning("%d curve(s) observed only in zero-weight bins are unrankable", int(np.isnan(depths).sum()))
    return DepthReport(pw.ids, depths, method, beta=beta, pointwise=pw)


class DepthCdf:
    """
    Right-continuous step function ``Psi(r)``: the share of the curve's (weighted) time spent at depth ``<= r``.
    ``levels`` are the distinct pointwise depths in increasing order, ``cum`` the value of Psi at each level.
    """

    def __init__(self, levels, cum):
        self.levels = np.asarray(levels, dtype=float)
        self.cum = np.asarray(cum, dtype=float)

    def __call__(self, r):
        index = np.searchsorted(self.levels, r, side="right")
        return np.where(index == 0, 0.0, self.cum[np.maximum(index - 1, 0)])

    def __repr__(self):
        return "{}.{}(levels={})".format(self.__module__, self.__class__.__name__, len(self.levels))


def depth_cdf(depths, bins, weights) -> DepthCdf:
    """
    Depth cdf of one curve from its pointwise depths. Each observation carries the weight of its bin divided by the
    number of the curve's observations in that bin; the weights are renormalized to total 1 (uniform when the
    curve's bins carry no weight).
    """
    depths = np.asarray(depths, dtype=float)
    bins = np.asarray(bins, dtype=int)
    if len(depths) == 0:
        raise ValueError("A depth cdf needs at least one observation")
    weights = np.asarray(weights, dtype=float)
    per_bin = np.bincount(bins, minlength=len(weights))
    mass = weights[bins] / per_bin[bins]
    if not mass.sum() > 0:
        mass = np.ones(len(depths))
    mass = mass / mass.sum()
    levels, inverse = np.unique(depths, return_inverse=True)
    cum = np.cumsum(np.bincount(inverse, weights=mass, minlength=len(levels)))
    cum[-1] = 1.0
    return DepthCdf(levels, np.minimum(cum, 1.0))


def extremal_compare(a: DepthCdf, b: DepthCdf) -> Extremity:
    """
    Compare two depth cdfs at the merged jump points in [0, 1). The first point where they differ by more than the
    tolerance decides: the larger cdf belongs to the more extreme curve.
    """
    points = np.union1d(a.levels, b.levels)
    points = points[points < 1]
    difference = a(points) - b(points)
    decisive = np.flatnonzero(np.abs(difference) > cdf_tolerance)
    if len(decisive) == 0:
        return Extremity.equivalent
    return Extremity.more_extreme if difference[decisive[0]] > 0 else Extremity.less_extreme


def _as_order(a, b):
    return {Extremity.more_extreme: -1, Extremity.equivalent: 0, Extremity.less_extreme: 1}[extremal_compare(a, b)]


def extremal_depth(pw: PointwiseDepths, weights, method: Method) -> DepthReport:
    """
    Extremal depth of every curve: the fraction of sample curves that are at least as extreme as it (itself
    included). The sample is sorted once, most extreme first.
    """
    weights = np.asarray(weights, dtype=float)
    n = len(pw)
    cdfs = [depth_cdf(values, bins, weights) for values, bins in zip(pw.values, pw.bins)]
    order = sorted(range(n), key=functools.cmp_to_key(lambda i, j: _as_order(cdfs[i], cdfs[j])))
    depths = np.zeros(n)
    start = 0
    while start < n:
        end = start + 1
        while end < n and _as_order(cdfs[order[start]], cdfs[order[end]]) == 0:
            end += 1
        for i in order[start:end]:
            depths[i] = end / n
        start = end
    return DepthReport(pw.ids, depths, method, pointwise=pw)


@dataclass
class DepthConfig:
    """
    Tunables shared by every depth method. ``n_s=None`` applies the default subsample size; ``min_count=None``
    merges bins below ``max(p + 1, 5)`` observations. ``lattice`` rounds the global depths behind GMFED onto the
    per-bin local depth values (see :func:`lattice_depths`).
    """

    n_bins: Union[int, str] = "auto"
    beta: float = default_beta
    n_s: Optional[int] = None
    subsample: bool = True
    robust: bool = True
    min_count: Optional[int] = None
    n_dirs: int = default_n_dirs
    seed: int = 0
    workers: int = 1
    lattice: bool = True


class _Products:
    def __init__(self, dataset, config):
        self.dataset = dataset
        self.config = config
        self.grid = prepare_grid(dataset, config.n_bins, config.min_count)
        self._local = None
        self._global = None
        self._pool = None

    def local(self):
        if self._local is None:
            cfg = self.config
            self._local = pointwise_local(self.dataset, self.grid, cfg.n_dirs, cfg.seed, cfg.workers)
        return self._local

    def global_(self):
        if self._global is None:
            cfg = self.config
            estimator = robust_bin_moments if cfg.robust else bin_moments
            moments = estimator(self.dataset, self.grid, workers=cfg.workers)
            normalized = normalize_dataset(self.dataset, self.grid, moments)
            self._pool = build_pool(normalized)
            if cfg.subsample:
                self._pool = subsample_pool(self._pool, cfg.n_s, seed=derive_seed(cfg.seed, "subsample"))
            self._global = pointwise_global(normalized, self.grid, moments, self._pool, cfg.n_dirs, cfg.seed)
        return self._global

    def report(self, method: Method) -> DepthReport:
        cfg = self.config
        pw = self.global_() if method in global_methods else self.local()
        if method in region_methods:
            clouds = [self._pool.cloud] if method in global_methods else bin_clouds(self.dataset, self.grid)
            weights = weights_region(self.grid, clouds, cfg.beta, cfg.n_dirs, cfg.seed, cfg.workers)
        else:
            weights = weights_time(self.grid)
        if method in extremal_methods:
            if method in global_methods and cfg.lattice:
                pw = lattice_depths(pw, self.grid)
            return extremal_depth(pw, weights, method)
        return integrated_depth(pw, weights, method, beta=cfg.beta if method in region_methods else None)


def compute_depths(dataset: Dataset, methods, config: Optional[DepthConfig] = None) -> Dict[Method, DepthReport]:
    """
    Compute several depth methods on one dataset, sharing the bin grid, the pointwise depths and the weights
    between them.
    """
    config = config or DepthConfig()
    dataset.check()
    products = _Products(dataset, config)
    reports = {}
    for method in map(parse_method, methods):
        reports[method] = products.report(method)
        logger.debug("Computed %s for %d curves over %d bins", method.name, len(dataset), products.grid.n_bins)
    return reports


def compute_depth(dataset: Dataset, method, config: Optional[DepthConfig] = None) -> DepthReport:
    method = parse_method(method)
    return compute_depths(dataset, [method], config)[method]
