"""
SVG renderings of the boxplot products and of benchmark metrics.

Figures are built with :class:`matplotlib.figure.Figure` directly (no pyplot state) and written with a fixed hash
salt and no date, so identical inputs give byte-identical files. Provenance goes into the SVG description.
"""
import json
import logging
import math

import matplotlib
import numpy as np
from matplotlib.colors import LinearSegmentedColormap
from matplotlib.figure import Figure

from . import Dataset
from .boxplot import BoxplotSummary, IntensitySurface

logger = logging.getLogger(__name__)

outlier_styles = {
    "domain": dict(color="green", gid="outlier-domain"),
    "functional": dict(color="red", gid="outlier-functional"),
    "potential1": dict(color="blue", gid="outlier-potential1"),
    "potential2": dict(color="yellow", gid="outlier-potential2"),
}
median_style = dict(color="black", gid="median")
lower_region_color = "magenta"
upper_region_color = "grey"
half_line_color = "cyan"

sparseness_colormap = LinearSegmentedColormap.from_list("sparseness", ["magenta", "white"])

metric_criteria = ("ase_median", "ase_central", "capture", "spearman", "runtime_s")

_rc = {"svg.hashsalt": "mfdepth", "svg.fonttype": "none"}


def _save(figure, path, provenance=None):
    metadata = {"Date": None, "Description": json.dumps(provenance or {}, sort_keys=True)}
    with matplotlib.rc_context(_rc):
        figure.savefig(path, format="svg", metadata=metadata)
    logger.info("Wrote %s", path)


def _curve_classes(outliers):
    """
    One class per flagged curve. Domain and functional outliers take precedence over potential outliers.
    """
    classes = {}
    for name in ("potential2", "potential1", "domain", "functional"):
        for curve_id in getattr(outliers, name):
            classes[curve_id] = name
    return classes


def plot_sparse_boxplot(summary: BoxplotSummary, dataset: Dataset, component: int, path, provenance=None):
    """
    Central region of one component split by the proportion line (lower part magenta, upper part grey), the dashed
    50% line, the nonoutlying envelope, flagged curves colored by outlier class, and the median in black.
    """
    sparse = summary.sparse
    t = sparse.midpoints
    lower, upper = sparse.lower[:, component], sparse.upper[:, component]
    line, half = sparse.line[:, component], sparse.half_line[:, component]
    figure = Figure(figsize=(8, 5))
    ax = figure.add_subplot()
    ax.fill_between(t, lower, line, color=lower_region_color, alpha=0.6, linewidth=0, gid="region-lower")
    ax.fill_between(t, line, upper, color=upper_region_color, alpha=0.6, linewidth=0, gid="region-upper")
    ax.plot(t, half, linestyle="--", color=half_line_color, gid="half-line")
    edges = summary.region.grid.midpoints
    ax.plot(edges, summary.envelope.upper[:, component], color="blue", linewidth=1, gid="envelope-upper")
    ax.plot(edges, summary.envelope.lower[:, component], color="blue", linewidth=1, gid="envelope-lower")
    for curve_id, name in sorted(_curve_classes(summary.outliers).items()):
        if curve_id not in dataset:
            continue
        curve, style = dataset[curve_id], outlier_styles[name]
        gid = f"{style['gid']}-{curve_id}"
        ax.plot(curve.times, curve.values[:, component], color=style["color"], linewidth=1, gid=gid)
    median = dataset[summary.median_id]
    ax.plot(median.times, median.values[:, component], linewidth=2, **median_style)
    ax.set_xlabel("t")
    ax.set_ylabel(f"y{component + 1}")
    _save(figure, path, provenance)


def plot_intensity(surface: IntensitySurface, path, provenance=None):
    """
    Normalized sparseness intensity over the central region: magenta where observations are densest, white where
    they are sparsest; outside the region is left blank.
    """
    figure = Figure(figsize=(8, 5))
    ax = figure.add_subplot()
    extent = (surface.t_grid[0], surface.t_grid[-1], surface.y_grid[0], surface.y_grid[-1])
    image = ax.imshow(
        np.ma.masked_invalid(surface.sparseness),
        origin="lower",
        aspect="auto",
        extent=extent,
        cmap=sparseness_colormap,
        vmin=0,
        vmax=1,
        interpolation="nearest",
    )
    figure.colorbar(image, ax=ax, label="sparseness intensity")
    ax.set_xlabel("t")
    ax.set_ylabel(f"y{surface.component + 1}")
    _save(figure, path, provenance)


def plot_metrics(rows, path, criteria=metric_criteria, provenance=None):
    """
    One panel per criterion with a boxplot of its values per depth method. Missing values are left out.
    """
    rows = [row.to_row() if hasattr(row, "to_row") else row for row in rows]
    methods = sorted({row["method"] for row in rows})
    figure = Figure(figsize=(4 * len(criteria), 4))
    for i, criterion in enumerate(criteria):
        ax = figure.add_subplot(1, len(criteria), i + 1)
        values = []
        for method in methods:
            column = [float(r[criterion]) for r in rows if r["method"] == method]
            values.append([v for v in column if not math.isnan(v)] or [math.nan])
        if methods:
            ax.boxplot(values)
            ax.set_xticks(range(1, len(methods) + 1))
            ax.set_xticklabels(methods, rotation=45, ha="right")
        ax.set_title(criterion)
    figure.tight_layout()
    _save(figure, path, provenance)
