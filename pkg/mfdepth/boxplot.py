"""
Outlier detection and boxplot summaries for irregularly observed multivariate curves.

The pipeline runs in three stages. First, curves whose observation span is abnormal are flagged as domain outliers.
Second, curves that are among the 10% shallowest by both GMFID and GMFED (or by either) are flagged as potential
outliers. Third, a 50% central region is built from the deepest half of the remaining curves, and curves breaching
its 1.5-range fences become functional outliers. Two data products summarise the result: the observed proportion
line inside the central region, and a kernel intensity surface of the observed points in it.

Bounds are computed binwise from observed points only; bins without observations are carried as NaN gaps.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Set

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.stats import norm

from . import Dataset, InsufficientDataError, durations, pool
from .binning import BinGrid, assign_many, prepare_grid
from .depths import DepthConfig, DepthReport, Method, compute_depth, compute_depths, parse_method
from .util import parallel_map
from .version import __version__

logger = logging.getLogger(__name__)

fence_factor = 1.5
smoothing_window = 3
default_raster_size = 100


class OutlierSets(NamedTuple):
    domain: Set[str]
    potential1: Set[str]
    potential2: Set[str]
    functional: Set[str]

    @property
    def all(self) -> Set[str]:
        return self.domain | self.potential1 | self.potential2 | self.functional

    def to_dict(self):
        return {name: sorted(ids) for name, ids in self._asdict().items()}


class Envelope(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class CentralRegion:
    """
    Binwise bounds of the deepest half of the curves: ``lower``, ``upper`` and ``range`` have shape (n_bins, p).
    """

    grid: BinGrid
    lower: np.ndarray
    upper: np.ndarray
    median_id: str
    members: List[str]

    @property
    def range(self) -> np.ndarray:
        return self.upper - self.lower

    def at(self, times):
        bins = assign_many(self.grid, times)
        return self.lower[bins], self.upper[bins]

    def to_dict(self):
        return dict(
            boundaries=self.grid.boundaries.tolist(),
            lower=_nan_to_none(self.lower),
            upper=_nan_to_none(self.upper),
            median_id=self.median_id,
            members=list(self.members),
        )


@dataclass
class SparseBoxplotData:
    """
    Observed proportions over ``len(proportions)`` equidistant windows, smoothed, and the resulting proportion
    line ``lower + p * range`` (and the 50% line) at the window midpoints, per component.
    """

    windows: np.ndarray
    proportions: np.ndarray
    smoothed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    line: np.ndarray
    half_line: np.ndarray
    envelope: Optional[Envelope] = None

    @property
    def midpoints(self) -> np.ndarray:
        return (self.windows[:-1] + self.windows[1:]) / 2

    def to_dict(self):
        doc = dict(
            windows=self.windows.tolist(),
            proportions=self.proportions.tolist(),
            smoothed=self.smoothed.tolist(),
            lower=_nan_to_none(self.lower),
            upper=_nan_to_none(self.upper),
            line=_nan_to_none(self.line),
            half_line=_nan_to_none(self.half_line),
        )
        if self.envelope is not None:
            doc["envelope"] = dict(lower=_nan_to_none(self.envelope.lower), upper=_nan_to_none(self.envelope.upper))
        return doc


@dataclass
class IntensitySurface:
    """
    Normalized observed intensity of one component on a raster over its central region (NaN outside the region).
    ``observed`` is indexed ``[y, t]``; ``at_points`` holds the normalized intensity at the observed points.
    """

    component: int
    t_grid: np.ndarray
    y_grid: np.ndarray
    observed: np.ndarray
    at_points: np.ndarray
    bandwidth: tuple

    @property
    def sparseness(self) -> np.ndarray:
        return np.clip(1.0 - self.observed, 0.0, 1.0)

    def to_dict(self):
        return dict(
            component=self.component,
            t_grid=self.t_grid.tolist(),
            y_grid=self.y_grid.tolist(),
            observed=_nan_to_none(self.observed),
            bandwidth=list(self.bandwidth),
        )


@dataclass
class BoxplotSummary:
    outliers: OutlierSets
    region: CentralRegion
    envelope: Envelope
    sparse: SparseBoxplotData
    intensity: List[IntensitySurface] = field(default_factory=list)
    method: str = Method.GMFID_wt.name
    provenance: dict = field(default_factory=dict)

    @property
    def median_id(self) -> str:
        return self.region.median_id

    def to_dict(self):
        return dict(
            version=__version__,
            method=self.method,
            median_id=self.median_id,
            outliers=self.outliers.to_dict(),
            central_region=self.region.to_dict(),
            envelope=dict(lower=_nan_to_none(self.envelope.lower), upper=_nan_to_none(self.envelope.upper)),
            sparse_boxplot=self.sparse.to_dict(),
            intensity=[surface.to_dict() for surface in self.intensity],
            provenance=dict(self.provenance),
        )


def _nan_to_none(array):
    return np.where(np.isnan(array), None, array).tolist()


def _iqr_outliers(values):
    q1, q3 = np.percentile(values, [25, 75])
    spread = fence_factor * (q3 - q1)
    return (values < q1 - spread) | (values > q3 + spread)


def domain_outliers(dataset: Dataset) -> Set[str]:
    """
    Curves whose time-interval length, or its logarithm, lies beyond the 1.5 IQR boxplot fences. Curves with a
    zero-length interval are always flagged.
    """
    summary = durations(dataset)
    ids = np.array(summary.ids, dtype=object)
    flagged = set(ids[_iqr_outliers(summary.lengths)])
    positive = summary.lengths > 0
    flagged |= set(ids[~positive])
    if positive.sum() > 0:
        flagged |= set(ids[positive][_iqr_outliers(summary.log_lengths[positive])])
    if flagged:
        logger.info("Flagged %d domain outlier(s)", len(flagged))
    return flagged


def potential_outliers(integrated: DepthReport, extremal: DepthReport):
    """
    Bottom-decile sets of both reports: their intersection (most potential outliers) and the rest of their union
    (second-most potential outliers).
    """
    if set(integrated.ids) != set(extremal.ids):
        raise ValueError("Both depth reports must cover the same curves")
    k = len(integrated) // 10
    bottom_integrated = set(integrated.shallowest(k))
    bottom_extremal = set(extremal.shallowest(k))
    most = bottom_integrated & bottom_extremal
    return most, (bottom_integrated | bottom_extremal) - most


def _binwise_bounds(dataset: Dataset, grid: BinGrid) -> Envelope:
    pooled = pool(dataset)
    bins = assign_many(grid, pooled.times)
    lower = np.full((grid.n_bins, dataset.p), np.inf)
    upper = np.full((grid.n_bins, dataset.p), -np.inf)
    np.minimum.at(lower, bins, pooled.values)
    np.maximum.at(upper, bins, pooled.values)
    lower[np.isinf(lower)] = np.nan
    upper[np.isinf(upper)] = np.nan
    return Envelope(lower, upper)


def binwise_curve_means(dataset: Dataset, grid: BinGrid) -> np.ndarray:
    """
    Mean of each curve's observations within each bin, shape (N, n_bins, p); NaN where a curve has no observation.
    """
    result = np.full((len(dataset), grid.n_bins, dataset.p), np.nan)
    for i, curve in enumerate(dataset.curves):
        bins = assign_many(grid, curve.times)
        counts = np.bincount(bins, minlength=grid.n_bins)
        for j in range(dataset.p):
            sums = np.bincount(bins, weights=curve.values[:, j], minlength=grid.n_bins)
            with np.errstate(invalid="ignore", divide="ignore"):
                result[i, :, j] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return result


def central_region(dataset: Dataset, report: DepthReport, grid: BinGrid) -> CentralRegion:
    """
    The 50% central region: binwise min and max over the observations of the ``ceil(N'/2)`` deepest curves.
    The median is the deepest curve.
    """
    if len(dataset) == 0:
        raise InsufficientDataError("Cannot build a central region from an empty sample")
    if set(report.ids) != set(dataset.ids):
        raise ValueError("The depth report must cover exactly the curves of the dataset")
    members = report.deepest(math.ceil(len(dataset) / 2))
    bounds = _binwise_bounds(dataset.subset(members), grid)
    return CentralRegion(grid, bounds.lower, bounds.upper, members[0], members)


def functional_outliers(dataset: Dataset, region: CentralRegion) -> Set[str]:
    """
    Curves with an observation beyond ``upper + 1.5 * range`` or below ``lower - 1.5 * range`` in any component.
    Observations in bins where the region has a gap are not checked.
    """
    flagged = set()
    width = region.range
    for curve in dataset.curves:
        bins = assign_many(region.grid, curve.times)
        with np.errstate(invalid="ignore"):
            above = curve.values > region.upper[bins] + fence_factor * width[bins]
            below = curve.values < region.lower[bins] - fence_factor * width[bins]
        if np.any(above | below):
            flagged.add(curve.id)
    if flagged:
        logger.info("Flagged %d functional outlier(s)", len(flagged))
    return flagged


def nonoutlying_bounds(dataset: Dataset, outliers, grid: BinGrid) -> Envelope:
    """
    Binwise max and min envelopes over the curves not in ``outliers``.
    """
    remaining = dataset.without(outliers)
    if len(remaining) == 0:
        nan = np.full((grid.n_bins, dataset.p), np.nan)
        return Envelope(nan, nan.copy())
    return _binwise_bounds(remaining, grid)


def observed_proportions(dataset: Dataset, windows) -> np.ndarray:
    """
    Number of observations per window divided by the number of curves, clipped at 1. Windows are half-open
    ``[t_{w-1}, t_w)`` except the last, which is closed.
    """
    times = pool(dataset).times
    index = np.clip(np.searchsorted(windows, times, side="right") - 1, 0, len(windows) - 2)
    inside = (times >= windows[0]) & (times <= windows[-1])
    counts = np.bincount(index[inside], minlength=len(windows) - 1)
    return np.minimum(counts / len(dataset), 1.0)


def _moving_average(values):
    return uniform_filter1d(values, size=smoothing_window, axis=0, mode="nearest")


def sparse_boxplot(
    dataset: Dataset, region: CentralRegion, n_windows: Optional[int] = None, envelope: Optional[Envelope] = None
) -> SparseBoxplotData:
    """
    Observed proportion per equidistant window over the time span, the proportion line ``lower + p * range`` and
    the 50% line inside the central region. Both lines go through a centered moving average over three windows:
    the proportions are smoothed before forming the proportion line, the 50% line is smoothed along time and kept
    inside the region.
    """
    n_windows = n_windows or region.grid.n_bins
    if n_windows < 1:
        raise ValueError(f"n_windows must be positive, got {n_windows}")
    lo, hi = region.grid.span
    windows = np.linspace(lo, hi, n_windows + 1)
    proportions = observed_proportions(dataset, windows)
    smoothed = _moving_average(proportions)
    lower, upper = region.at((windows[:-1] + windows[1:]) / 2)
    width = upper - lower
    midline = lower + 0.5 * width
    with np.errstate(invalid="ignore"):
        half_line = np.clip(_moving_average(midline), lower, upper)
    return SparseBoxplotData(
        windows=windows,
        proportions=proportions,
        smoothed=smoothed,
        lower=lower,
        upper=upper,
        line=lower + smoothed[:, None] * width,
        half_line=np.where(np.isfinite(half_line), half_line, midline),
        envelope=envelope,
    )


def silverman_bandwidth(points) -> tuple:
    """
    Per-axis normal-reference bandwidth for a bivariate Gaussian kernel, ``sigma * n ** (-1 / 6)``. A degenerate
    axis falls back to a tenth of its extent, or 1.
    """
    n = len(points)
    result = []
    for axis in range(points.shape[1]):
        sigma = float(np.std(points[:, axis], ddof=1)) if n > 1 else 0.0
        h = sigma * n ** (-1 / 6)
        if not h > 0:
            extent = float(np.ptp(points[:, axis]))
            h = extent / 10 if extent > 0 else 1.0
        result.append(h)
    return tuple(result)


def _component_surface(dataset, region, j, bandwidth, raster_size):
    pooled = pool(dataset)
    bins = assign_many(region.grid, pooled.times)
    lower, upper = region.lower[:, j], region.upper[:, j]
    y = pooled.values[:, j]
    with np.errstate(invalid="ignore"):
        inside = (y >= lower[bins]) & (y <= upper[bins])
    points = np.column_stack([pooled.times[inside], y[inside]])
    if len(points) == 0:
        raise InsufficientDataError(f"No observed point of component {j + 1} lies inside the central region")
    h_t, h_y = bandwidth or silverman_bandwidth(points)

    lo, hi = region.grid.span
    t_grid = np.linspace(lo, hi, raster_size)
    y_lo, y_hi = np.nanmin(lower), np.nanmax(upper)
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - h_y, y_hi + h_y
    y_grid = np.linspace(y_lo, y_hi, raster_size)
    step = t_grid[1] - t_grid[0] if raster_size > 1 else 1.0
    column_lower, column_upper = region.at(t_grid)
    column_lower, column_upper = column_lower[:, j], column_upper[:, j]
    column_open = np.isfinite(column_lower) & np.isfinite(column_upper)

    def kernel_mass(t_centers, y_centers):
        # share of a kernel centered at (t, y) that falls inside the region, integrated over raster columns
        time_weight = step * norm.pdf((t_grid[None, :] - np.asarray(t_centers)[:, None]) / h_t) / h_t
        vertical = norm.cdf((column_upper[None, :] - np.asarray(y_centers)[:, None]) / h_y) - norm.cdf(
            (column_lower[None, :] - np.asarray(y_centers)[:, None]) / h_y
        )
        vertical = np.where(column_open[None, :], vertical, 0.0)
        return time_weight, vertical

    def intensity(t_values, y_values):
        t_values, y_values = np.asarray(t_values), np.asarray(y_values)
        result = np.empty(len(t_values))
        for start in range(0, len(t_values), 1000):
            tq, yq = t_values[start : start + 1000], y_values[start : start + 1000]
            kernel_t = norm.pdf((tq[:, None] - points[None, :, 0]) / h_t) / h_t
            kernel_y = norm.pdf((yq[:, None] - points[None, :, 1]) / h_y) / h_y
            time_weight, vertical = kernel_mass(tq, yq)
            mass = np.sum(time_weight * vertical, axis=1)
            result[start : start + 1000] = np.sum(kernel_t * kernel_y, axis=1) / np.where(mass > 0, mass, 1.0)
        return result

    at_points_raw = intensity(points[:, 0], points[:, 1])
    scale = at_points_raw.max()
    tt, yy = np.meshgrid(t_grid, y_grid)
    surface = intensity(tt.ravel(), yy.ravel()).reshape(raster_size, raster_size)
    with np.errstate(invalid="ignore"):
        in_region = (yy >= column_lower[None, :]) & (yy <= column_upper[None, :])
    observed = np.where(in_region, np.clip(surface / scale, 0.0, 1.0), np.nan)
    return IntensitySurface(j, t_grid, y_grid, observed, np.clip(at_points_raw / scale, 0.0, 1.0), (h_t, h_y))


def intensity_boxplot(
    dataset: Dataset, region: CentralRegion, bandwidth=None, raster_size=default_raster_size, workers=1
) -> List[IntensitySurface]:
    """
    Gaussian kernel intensity of the observed points inside the central region, one surface per component, on a
    ``raster_size`` x ``raster_size`` raster. Every point has weight 1; the edge correction is the reciprocal of the
    kernel mass inside the region. Intensities are normalized by their maximum over the observed points.
    """
    return parallel_map(
        lambda j: _component_surface(dataset, region, j, bandwidth, raster_size), range(dataset.p), workers=workers
    )


def run_pipeline(
    dataset: Dataset,
    config: Optional[DepthConfig] = None,
    potential=True,
    n_windows=None,
    raster_size=default_raster_size,
    bandwidth=None,
    method=Method.GMFID_wt,
    intensity=True,
) -> BoxplotSummary:
    """
    Run the three-stage outlier pipeline and build both boxplot products.

    Domain outliers are removed first. Potential outliers (optional) come from GMFID_wt and GMFED on the remainder
    and are removed next. The central region, its median and the functional outliers are then computed on what is
    left, with ``method`` as the ranking depth. Observed proportions and intensities use every curve.
    """
    config = config or DepthConfig()
    method = parse_method(method)
    dataset.check()
    domain = domain_outliers(dataset)
    remainder = dataset.without(domain)
    most, second = set(), set()
    if potential and len(remainder) >= 10:
        reports = compute_depths(remainder, [Method.GMFID_wt, Method.GMFED], config)
        most, second = potential_outliers(reports[Method.GMFID_wt], reports[Method.GMFED])
        logger.info("Flagged %d most and %d second-most potential outlier(s)", len(most), len(second))
    remainder = remainder.without(most | second)
    if len(remainder) < 2:
        raise InsufficientDataError(f"Only {len(remainder)} curve(s) remain after removing outliers")
    grid = prepare_grid(remainder, config.n_bins, config.min_count)
    report = compute_depth(remainder, method, config)
    region = central_region(remainder, report, grid)
    functional = functional_outliers(remainder, region)
    outliers = OutlierSets(domain, most, second, functional)
    envelope = nonoutlying_bounds(dataset, outliers.all, grid)
    sparse = sparse_boxplot(dataset, region, n_windows, envelope)
    surfaces = intensity_boxplot(dataset, region, bandwidth, raster_size, config.workers) if intensity else []
    return BoxplotSummary(outliers, region, envelope, sparse, surfaces, method=method.name)
