"""
Assessment criteria for depth methods under contamination and sparseness, and the benchmark and timing harnesses.

Each benchmark replicate generates a clean sample, contaminates a copy, applies the same sparseness pattern to both
and computes every requested depth on both. Probes are the bin midpoints of the clean sample's grid.
"""
import itertools
import logging
import time
from dataclasses import asdict, dataclass, replace
from typing import Iterable, List, NamedTuple, Optional

import numpy as np

from . import MFDepthException
from .binning import prepare_grid
from .boxplot import binwise_curve_means, central_region
from .depths import DepthConfig, DepthReport, compute_depth, parse_method
from .simulate import ContaminationSpec, ModelSpec, SparsenessSpec, contaminate, generate, sparsify
from .util import derive_seed, parallel_map

logger = logging.getLogger(__name__)

columns = (
    "model",
    "outlier_type",
    "sparseness_type",
    "p_curve_level",
    "method",
    "replicate",
    "ase_median",
    "ase_central",
    "capture",
    "spearman",
    "runtime_s",
)

timing_columns = ("method", "n_curves", "n_times", "repeat", "runtime_s")

oracles = ("deepest", "mean")


@dataclass
class AssessmentResult:
    model: str
    outlier_type: str
    sparseness_type: str
    p_curve_level: str
    method: str
    replicate: int
    ase_median: float = float("nan")
    ase_central: float = float("nan")
    capture: float = float("nan")
    spearman: float = float("nan")
    runtime_s: float = float("nan")

    def to_row(self):
        return asdict(self)


@dataclass
class TimingResult:
    method: str
    n_curves: int
    n_times: int
    repeat: int
    runtime_s: float

    def to_row(self):
        return asdict(self)


class BenchmarkCell(NamedTuple):
    model: str
    outlier_type: str
    sparseness_type: str
    p_curve_level: str


def benchmark_cells(models, outlier_types, sparseness_types, levels) -> List[BenchmarkCell]:
    return [BenchmarkCell(*cell) for cell in itertools.product(models, outlier_types, sparseness_types, levels)]


def _usable(*arrays):
    mask = np.ones(np.shape(arrays[0]), dtype=bool)
    for array in arrays:
        mask &= np.isfinite(array)
    return mask


def ase_median(contaminated_median, clean_median, iqr) -> float:
    """
    Mean over probes and components of ``((m_c - m) / R)^2``. Probes where ``R`` is not positive (or any input is
    missing) are skipped.
    """
    m_c, m, iqr = (np.asarray(a, dtype=float) for a in (contaminated_median, clean_median, iqr))
    usable = _usable(m_c, m, iqr)
    usable[usable] &= iqr[usable] > 0
    skipped = int(np.sum(np.isfinite(iqr) & (iqr <= 0)))
    if skipped:
        logger.warning("Skipped %d probe(s) with a zero interquartile range", skipped)
    if not usable.any():
        return float("nan")
    return float(np.mean(((m_c[usable] - m[usable]) / iqr[usable]) ** 2))


def ase_central(contaminated_range, clean_range) -> float:
    """
    Mean over probes and components of ``log(R_c / R)^2``; probes with a nonpositive range are skipped.
    """
    r_c, r = np.asarray(contaminated_range, dtype=float), np.asarray(clean_range, dtype=float)
    usable = _usable(r_c, r)
    usable[usable] &= (r_c[usable] > 0) & (r[usable] > 0)
    skipped = int(np.sum(_usable(r_c, r) & ~usable))
    if skipped:
        logger.warning("Skipped %d probe(s) with a nonpositive 50%% range", skipped)
    if not usable.any():
        return float("nan")
    return float(np.mean(np.log(r_c[usable] / r[usable]) ** 2))


def outlier_capture(report: DepthReport, outliers) -> float:
    """
    Share of the ``floor(N / 10)`` shallowest curves that are true outliers, normalized by ``floor(N / 10)``.
    """
    k = len(report) // 10
    if k == 0:
        return float("nan")
    bottom = set(report.shallowest(k))
    return len(bottom & set(outliers)) / k


def spearman_nonoutliers(clean_ranks, contaminated_ranks, outlier_mask=None) -> float:
    """
    Correlation of the centered clean and contaminated rank vectors over the nonoutliers. NaN when either vector is
    constant.
    """
    a, b = np.asarray(clean_ranks, dtype=float), np.asarray(contaminated_ranks, dtype=float)
    if outlier_mask is not None:
        keep = ~np.asarray(outlier_mask, dtype=bool)
        a, b = a[keep], b[keep]
    if len(a) == 0:
        raise ValueError("No nonoutlier left to correlate")
    a, b = a - a.mean(), b - b.mean()
    denominator = np.sqrt(np.sum(a**2) * np.sum(b**2))
    if denominator == 0:
        return float("nan")
    return float(np.sum(a * b) / denominator)


def _central_curve(dataset, report, grid):
    means = binwise_curve_means(dataset, grid)
    return means[dataset.index_of(report.median_id)]


def _oracle_curve(dataset, report, grid, outliers, oracle):
    if oracle == "deepest":
        return _central_curve(dataset, report, grid)
    means = binwise_curve_means(dataset.without(outliers), grid)
    with np.errstate(invalid="ignore"):
        counts = np.sum(np.isfinite(means), axis=0)
        return np.where(counts > 0, np.nansum(means, axis=0) / np.maximum(counts, 1), np.nan)


def assess(clean, contaminated, outliers, method, config: DepthConfig, oracle="deepest"):
    """
    Compute one method on the clean and contaminated samples and score it. Returns the four quality criteria and
    the run time of the contaminated depth call, in seconds.
    """
    if oracle not in oracles:
        raise ValueError(f"Unknown oracle {oracle!r}, expected one of {oracles}")
    clean_report = compute_depth(clean, method, config)
    start = time.perf_counter()
    contaminated_report = compute_depth(contaminated, method, config)
    runtime = time.perf_counter() - start
    grid = prepare_grid(clean, config.n_bins, config.min_count)
    clean_region = central_region(clean, clean_report, grid)
    contaminated_region = central_region(contaminated, contaminated_report, grid)
    truth = _oracle_curve(clean, clean_report, grid, outliers, oracle)
    estimate = _central_curve(contaminated, contaminated_report, grid)
    mask = np.isin(contaminated_report.ids, list(outliers))
    clean_ranks = clean_report.ranks[[clean_report.ids.index(i) for i in contaminated_report.ids]]
    return dict(
        ase_median=ase_median(estimate, truth, clean_region.range),
        ase_central=ase_central(contaminated_region.range, clean_region.range),
        capture=outlier_capture(contaminated_report, outliers),
        spearman=spearman_nonoutliers(clean_ranks, contaminated_report.ranks, mask),
        runtime_s=runtime,
    )


def _run_replicate(task):
    cell, replicate, methods, settings = task
    seed = derive_seed(settings["seed"], *cell, replicate)
    rows = [AssessmentResult(*cell, method=m.name, replicate=replicate) for m in methods]
    try:
        simulated = generate(
            ModelSpec(cell.model, settings["n_curves"], settings["n_times"]), derive_seed(seed, "generate")
        )
        contamination = contaminate(
            simulated, ContaminationSpec(cell.outlier_type, settings["rate"]), derive_seed(seed, "contaminate")
        )
        sparseness = SparsenessSpec(cell.sparseness_type, cell.p_curve_level, settings["p_s"])
        sparse_seed = derive_seed(seed, "sparsify")
        clean = sparsify(simulated.dataset, sparseness, sparse_seed)
        contaminated = sparsify(contamination.dataset, sparseness, sparse_seed)
    except MFDepthException as e:
        logger.error("Replicate %d of %s failed during simulation: %s", replicate, cell, e)
        return rows
    config = replace(settings["config"], seed=derive_seed(seed, "depth"))
    for row, method in zip(rows, methods):
        try:
            scores = assess(clean, contaminated, contamination.outliers, method, config, settings["oracle"])
            for key, value in scores.items():
                setattr(row, key, value)
        except (MFDepthException, ValueError, np.linalg.LinAlgError) as e:
            logger.error("%s failed on replicate %d of %s: %s", method.name, replicate, cell, e)
    return rows


def run_benchmark(
    cells: Iterable[BenchmarkCell],
    methods,
    replicates=1,
    seed=0,
    n_curves=200,
    n_times=50,
    rate=0.1,
    p_s=1.0,
    oracle="deepest",
    config: Optional[DepthConfig] = None,
    workers=1,
) -> List[AssessmentResult]:
    """
    Run every cell for ``replicates`` replicates and every method. Failures are logged and leave NaN metrics in the
    affected rows; the run continues. Each replicate derives its own seeds from ``seed``, the cell and the replicate
    number, so rows are reproducible independently of ``workers``.
    """
    if oracle not in oracles:
        raise ValueError(f"Unknown oracle {oracle!r}, expected one of {oracles}")
    methods = [parse_method(m) for m in methods]
    settings = dict(
        seed=seed,
        n_curves=n_curves,
        n_times=n_times,
        rate=rate,
        p_s=p_s,
        oracle=oracle,
        config=replace(config or DepthConfig(), workers=1),
    )
    tasks = [(BenchmarkCell(*cell), r, methods, settings) for cell in cells for r in range(replicates)]
    results = []
    for i, rows in enumerate(parallel_map(_run_replicate, tasks, workers=workers)):
        results.extend(rows)
        logger.info("Finished replicate %d/%d", i + 1, len(tasks))
    return results


def run_timing(
    sizes=(500, 1000, 2000),
    n_times=50,
    methods=("GMFID_wt", "GMFID_wd", "GMFED", "LMFID_wt", "LMFID_wd", "LMFED"),
    repeats=1,
    seed=0,
    model="I",
    outlier_type="magnitude_I",
    sparseness_type="point",
    level="high",
    config: Optional[DepthConfig] = None,
) -> List[TimingResult]:
    """
    Wall-clock time of each depth method on contaminated, sparsified samples of increasing size. Only the depth
    call is timed.
    """
    config = config or DepthConfig()
    results = []
    for n_curves in sizes:
        for repeat in range(repeats):
            run_seed = derive_seed(seed, "timing", n_curves, repeat)
            simulated = generate(ModelSpec(model, n_curves, n_times), derive_seed(run_seed, "generate"))
            contaminated = contaminate(simulated, ContaminationSpec(outlier_type), derive_seed(run_seed, "outliers"))
            sparseness = SparsenessSpec(sparseness_type, level)
            dataset = sparsify(contaminated.dataset, sparseness, derive_seed(run_seed, "sparsify"))
            for method in map(parse_method, methods):
                start = time.perf_counter()
                compute_depth(dataset, method, replace(config, seed=derive_seed(run_seed, "depth")))
                results.append(TimingResult(method.name, n_curves, n_times, repeat, time.perf_counter() - start))
                logger.info("%s on N=%d took %.3fs", method.name, n_curves, results[-1].runtime_s)
    return results
