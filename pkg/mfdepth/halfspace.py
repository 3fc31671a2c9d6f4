"""
Tukey halfspace depth, the base multivariate depth of every functional depth in this package.

For p = 1 and p = 2 the depth is exact: in one dimension it is a two-sided count, in two dimensions it is computed by
an angular sweep around the query point (sort the directions to the sample points, then count the points in every
open half-circle starting just after a critical angle), O(n log n) per query. For p >= 3 the depth is approximated by
the minimum one-dimensional depth over random projections, which is an upper bound of the exact depth.

Closed halfspaces are used throughout, so a query point that coincides with sample points counts them.
"""
import logging
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
angle_tolerance = 1e-12
default_n_dirs = 500
_chunk_elements = 250_000


def _as_cloud(cloud, p=None):
    cloud = np.asarray(cloud, dtype=float)
    if cloud.ndim == 1:
        cloud = cloud.reshape(-1, 1) if p in (None, 1) else cloud.reshape(1, -1)
    if len(cloud) == 0:
        raise ValueError("Point cloud is empty")
    return cloud


def _depth_1d_many(queries, cloud):
    ordered = np.sort(cloud)
    n = len(ordered)
    below = np.searchsorted(ordered, queries, side="right")
    above = n - np.searchsorted(ordered, queries, side="left")
    return np.minimum(below, above) / n


def depth_1d(x: float, cloud) -> float:
    """
    Univariate halfspace depth ``min(#{y <= x}, #{y >= x}) / n``.
    """
    return float(_depth_1d_many(np.array([float(x)]), _as_cloud(cloud, 1)[:, 0])[0])


def _depth_2d_chunk(queries, cloud):
    n = len(cloud)
    q = len(queries)
    diff = cloud[None, :, :] - queries[:, None, :]
    coincident = (diff[..., 0] == 0) & (diff[..., 1] == 0)
    theta = np.mod(np.arctan2(diff[..., 1], diff[..., 0]), TWO_PI)
    theta = np.where(theta >= TWO_PI - angle_tolerance, 0.0, theta)
    # coincident points sort after every real angle and never fall inside a half-circle
    sentinel = 5 * TWO_PI
    theta = np.where(coincident, sentinel, theta)
    doubled = np.sort(np.concatenate([theta, theta + TWO_PI], axis=1), axis=1)
    offsets = (np.arange(q) * 8 * TWO_PI)[:, None]
    flat = (doubled + offsets).ravel()

    starts = np.concatenate([theta, np.mod(theta + math.pi, TWO_PI)], axis=1)
    valid = np.concatenate([~coincident, ~coincident], axis=1)
    lo = (starts + angle_tolerance + offsets).ravel()
    hi = (starts + math.pi + angle_tolerance + offsets).ravel()
    counts = np.searchsorted(flat, hi, side="right") - np.searchsorted(flat, lo, side="right")
    counts = np.where(valid, counts.reshape(q, -1), n)
    min_counts = counts.min(axis=1)
    n_coincident = coincident.sum(axis=1)
    min_counts = np.where(n_coincident == n, 0, min_counts)
    return (n_coincident + min_counts) / n


def _depth_2d_many(queries, cloud):
    if len(queries) == 0:
        return np.zeros(0)
    chunk = max(1, _chunk_elements // len(cloud))
    return np.concatenate([_depth_2d_chunk(queries[i : i + chunk], cloud) for i in range(0, len(queries), chunk)])


def depth_2d_exact(x, cloud) -> float:
    """
    Exact bivariate halfspace depth of ``x``: the smallest fraction of sample points in a closed halfplane whose
    boundary passes through ``x``.
    """
    cloud = _as_cloud(cloud, 2)
    if cloud.shape[1] != 2:
        raise ValueError(f"Expected a bivariate cloud, got p={cloud.shape[1]}")
    return float(_depth_2d_many(np.asarray(x, dtype=float).reshape(1, 2), cloud)[0])


def random_directions(p: int, n_dirs: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((n_dirs, p))
    norms = np.linalg.norm(directions, axis=1)
    while np.any(norms == 0):
        directions[norms == 0] = rng.standard_normal((int((norms == 0).sum()), p))
        norms = np.linalg.norm(directions, axis=1)
    return directions / norms[:, None]


def _depth_projected_many(queries, cloud, n_dirs, seed):
    directions = random_directions(cloud.shape[1], n_dirs, seed)
    projected_cloud = np.sort(cloud @ directions.T, axis=0)
    projected_queries = queries @ directions.T
    n = len(cloud)
    depth = np.full(len(queries), np.inf)
    for d in range(n_dirs):
        column = projected_cloud[:, d]
        below = np.searchsorted(column, projected_queries[:, d], side="right")
        above = n - np.searchsorted(column, projected_queries[:, d], side="left")
        depth = np.minimum(depth, np.minimum(below, above) / n)
    return depth


def depth_nd_approx(x, cloud, n_dirs: int = default_n_dirs, seed=0) -> float:
    """
    Random-projection approximation of the halfspace depth: the minimum univariate depth of the projected point over
    ``n_dirs`` uniformly distributed unit directions. Deterministic for a given seed; never below the exact depth.
    """
    if n_dirs < 1:
        raise ValueError("n_dirs must be positive")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    cloud = _as_cloud(cloud, x.shape[1])
    return float(_depth_projected_many(x, cloud, n_dirs, seed)[0])


def halfspace_depth(queries, cloud, n_dirs: int = default_n_dirs, seed=0) -> np.ndarray:
    """
    Halfspace depth of every row of ``queries`` with respect to ``cloud``: exact for p <= 2, random projections for
    p >= 3.
    """
    cloud = _as_cloud(cloud)
    p = cloud.shape[1]
    queries = np.asarray(queries, dtype=float).reshape(-1, p)
    if p == 1:
        return _depth_1d_many(queries[:, 0], cloud[:, 0])
    if p == 2:
        return _depth_2d_many(queries, cloud)
    return _depth_projected_many(queries, cloud, n_dirs, seed)


def region_volume(cloud, beta: float, n_dirs: int = default_n_dirs, seed=0) -> float:
    """
    Volume of the sample beta-depth region ``{x: D(x) > beta}``, estimated by the convex hull of the sample points
    whose depth exceeds beta (the length of their range for p = 1). Returns 0 when fewer than p + 1 points qualify.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    cloud = _as_cloud(cloud)
    p = cloud.shape[1]
    inner = cloud[halfspace_depth(cloud, cloud, n_dirs=n_dirs, seed=seed) > beta]
    if p == 1:
        return float(inner.max() - inner.min()) if len(inner) else 0.0
    if len(inner) < p + 1:
        return 0.0
    try:
        return float(ConvexHull(inner).volume)
    except QhullError:
        return 0.0
