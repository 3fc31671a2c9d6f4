"""
mfdepth: global and local multivariate functional depths for irregularly observed multivariate functional data

Run "mfdepth COMMAND --help" for command-specific usage and options. Settings can also be read from a JSON or TOML
file given with --config; flags given on the command line take precedence over the file.

Exit codes: 0 on success; 2 for usage errors; 3 when the input data is invalid (a malformed input file or a dataset
that fails validation); 1 for all other errors. On failure, a one-line JSON object with the error class and message
is printed to standard error.
"""
import argparse
import json
import logging
import sys

from . import MFDepthException, ValidationError, __version__, durations, validate
from .binning import prepare_grid
from .boxplot import run_pipeline
from .config import RunConfig, load_config_file
from .depths import Method, compute_depths, parse_method
from .metrics import benchmark_cells, columns, run_benchmark, run_timing, timing_columns
from .plotting import plot_intensity, plot_metrics, plot_sparse_boxplot
from .serialization import load_csv, save_boxplot, save_dataset, save_json, save_metrics, save_report
from .simulate import (
    ContaminationSpec,
    ModelSpec,
    SparsenessSpec,
    contaminate,
    generate,
    parse_model,
    parse_outlier_type,
    parse_sparseness_type,
    sparsify,
)
from .util import derive_seed

logger = logging.getLogger(__name__)


def print_json(data):
    print(json.dumps(data, indent=4))


def comma_list(value):
    return [v.strip() for v in value.split(",") if v.strip()]


def method_list(value):
    names = comma_list(value)
    if [n.lower() for n in names] == ["all"]:
        return [m.name for m in Method]
    return [parse_method(n).name for n in names]


def n_bins_value(value):
    return value if value == "auto" else int(value)


def on_off(value):
    if value not in {"on", "off"}:
        raise ValueError(value)
    return value == "on"


def bandwidth_value(value):
    result = [float(v) for v in comma_list(value)]
    if len(result) != 2 or min(result) <= 0:
        raise ValueError(value)
    return result


def _enum_names(parse):
    def convert(value):
        try:
            return [parse(v).name for v in comma_list(value)]
        except MFDepthException as e:
            raise argparse.ArgumentTypeError(str(e))

    return convert


common = argparse.ArgumentParser(add_help=False)
common.add_argument("--config", help="JSON or TOML file with settings (flags take precedence)")
common.add_argument("--output-dir", help="Directory for output files (default: current directory)")
common.add_argument("--seed", type=int, help="Global random seed (default: 0)")
common.add_argument("--workers", type=int, help="Worker threads (default: $MFDEPTH_WORKERS or 1)")
common.add_argument("--verbose", action="store_true", default=None, help="Log debug messages")
common.add_argument("--quiet", action="store_true", default=None, help="Log warnings and errors only")

depth_options = argparse.ArgumentParser(add_help=False)
depth_options.add_argument("--n-bins", type=n_bins_value, help='Number of time bins, or "auto" (default)')
depth_options.add_argument("--beta", type=float, help="Central region level for the wd weights (default: 0.25)")
depth_options.add_argument("--n-s", type=int, help="Size of the subsampled global pool")
depth_options.add_argument(
    "--no-subsample", dest="subsample", action="store_false", default=None, help="Use the whole global pool"
)
depth_options.add_argument(
    "--plain-moments",
    dest="robust",
    action="store_false",
    default=None,
    help="Whiten with sample mean and covariance instead of the robust estimates",
)
depth_options.add_argument(
    "--continuous-extremal",
    dest="lattice",
    action="store_false",
    default=None,
    help="Keep the global depths behind GMFED unrounded instead of moving them onto the per-bin lattice",
)
depth_options.add_argument("--min-count", type=int, help="Minimum observations per bin after merging")
depth_options.add_argument("--n-dirs", type=int, help="Random directions for halfspace depth when p > 2")

simulation_options = argparse.ArgumentParser(add_help=False)
simulation_options.add_argument("--n-curves", type=int, help="Number of curves (default: 200)")
simulation_options.add_argument("--n-times", type=int, help="Number of grid points per curve (default: 50)")
simulation_options.add_argument("--rate", type=float, help="Contamination rate (default: 0.1)")
simulation_options.add_argument("--p-s", type=float, help="Fraction of curves made sparse (default: 1)")

parser = argparse.ArgumentParser(prog="mfdepth", description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
parser.add_argument("--version", action="version", version=f"mfdepth {__version__}")
subparsers = parser.add_subparsers(dest="command", required=True)

depth_parser = subparsers.add_parser(
    "depth", parents=[common, depth_options], help="Compute depths and ranks of the curves in a dataset"
)
depth_parser.add_argument("--input", help="Dataset CSV (id,t,y1,...,yp)")
depth_parser.add_argument(
    "--method", dest="methods", type=method_list, help='Comma-separated depth methods, or "all" (default: GMFID_wt)'
)
depth_parser.add_argument("--format", choices=["csv", "json"], default="csv", help="Report format")

simulate_parser = subparsers.add_parser(
    "simulate", parents=[common, simulation_options], help="Generate a contaminated, sparsified sample"
)
simulate_parser.add_argument("--model", dest="models", type=_enum_names(parse_model), help="Model I, II, III or IV")
simulate_parser.add_argument("--outlier", dest="outliers", type=_enum_names(parse_outlier_type), help="Outlier type")
simulate_parser.add_argument(
    "--sparseness", type=_enum_names(parse_sparseness_type), help="Sparseness type: none, point, peak or partial"
)
simulate_parser.add_argument("--level", dest="levels", type=comma_list, help="dense, medium or high")
simulate_parser.add_argument("--jitter", type=float, help="Jitter of the time grid, as a fraction of its step")

benchmark_parser = subparsers.add_parser(
    "benchmark",
    parents=[common, depth_options, simulation_options],
    help="Assess depth methods on simulated data (and optionally time them)",
)
benchmark_parser.add_argument("--models", type=_enum_names(parse_model), help="Comma-separated models")
benchmark_parser.add_argument("--outliers", type=_enum_names(parse_outlier_type), help="Comma-separated outlier types")
benchmark_parser.add_argument(
    "--sparseness", type=_enum_names(parse_sparseness_type), help="Comma-separated sparseness types"
)
benchmark_parser.add_argument("--levels", type=comma_list, help="Comma-separated sparseness levels")
benchmark_parser.add_argument("--reps", dest="replicates", type=int, help="Replicates per cell (default: 1)")
benchmark_parser.add_argument("--methods", type=method_list, help='Comma-separated depth methods, or "all"')
benchmark_parser.add_argument("--oracle", choices=["deepest", "mean"], help="Central curve of the clean sample")
benchmark_parser.add_argument(
    "--timing-sizes", type=lambda v: [int(n) for n in comma_list(v)], help="Also time every method at these N"
)
benchmark_parser.add_argument("--timing-repeats", type=int, help="Repeats per timing size (default: 1)")

boxplot_parser = subparsers.add_parser(
    "boxplot", parents=[common, depth_options], help="Detect outliers and build the sparse and intensity boxplots"
)
boxplot_parser.add_argument("--input", help="Dataset CSV (id,t,y1,...,yp)")
boxplot_parser.add_argument("--method", dest="methods", type=method_list, help="Depth used for the central region")
boxplot_parser.add_argument(
    "--potential-outliers", dest="potential", type=on_off, help="on (default) or off: detect potential outliers"
)
boxplot_parser.add_argument("--windows", type=int, help="Number of windows of the sparse boxplot")
boxplot_parser.add_argument("--raster", type=int, help="Raster size of the intensity surfaces (default: 100)")
boxplot_parser.add_argument("--bandwidth", type=bandwidth_value, help="Kernel bandwidths h_t,h_y (default: Silverman)")
boxplot_parser.add_argument(
    "--no-intensity", dest="intensity", action="store_false", default=None, help="Skip the intensity boxplot"
)

validate_parser = subparsers.add_parser("validate", parents=[common], help="Check a dataset and report diagnostics")
validate_parser.add_argument("--input", help="Dataset CSV (id,t,y1,...,yp)")


def _require_input(config: RunConfig):
    if not config.input:
        subparsers.choices[config.command].error("the following arguments are required: --input")


def depth(config: RunConfig, args):
    _require_input(config)
    dataset = load_csv(config.input)
    reports = compute_depths(dataset, config.methods, config.depth_config())
    path = config.output_path(f"depths.{args.format}")
    save_report(path, [reports[parse_method(m)] for m in config.methods], config.provenance)
    print_json({method.name: report.deepest(1) for method, report in reports.items()})
    return [path]


def simulate(config: RunConfig, args):
    seed = config.seed
    simulated = generate(
        ModelSpec(config.models[0], config.n_curves, config.n_times, config.jitter), derive_seed(seed, "generate")
    )
    contamination = contaminate(
        simulated, ContaminationSpec(config.outliers[0], config.rate), derive_seed(seed, "contaminate")
    )
    sparseness = SparsenessSpec(config.sparseness[0], config.levels[0], config.p_s)
    dataset = sparsify(contamination.dataset, sparseness, derive_seed(seed, "sparsify"))
    data_path, truth_path = config.output_path("simulated.csv"), config.output_path("truth.json")
    save_dataset(data_path, dataset, config.provenance)
    truth = dict(
        provenance=config.provenance,
        model=simulated.model.name,
        outlier_type=contamination.kind.name,
        outliers=contamination.outliers,
        params=contamination.params,
        ids=simulated.dataset.ids,
        scores=simulated.scores,
        noise_variances=simulated.noise_variances,
    )
    save_json(truth_path, truth)
    print_json(dict(curves=len(dataset), observations=dataset.n_obs, outliers=len(contamination.outliers)))
    return [data_path, truth_path]


def benchmark(config: RunConfig, args):
    cells = benchmark_cells(config.models, config.outliers, config.sparseness, config.levels)
    logger.info("Running %d cell(s) x %d replicate(s)", len(cells), config.replicates)
    rows = run_benchmark(
        cells,
        config.methods,
        replicates=config.replicates,
        seed=config.seed,
        n_curves=config.n_curves,
        n_times=config.n_times,
        rate=config.rate,
        p_s=config.p_s,
        oracle=config.oracle,
        config=config.depth_config(),
        workers=config.workers,
    )
    outputs = [config.output_path("metrics.csv"), config.output_path("metrics.svg")]
    save_metrics(outputs[0], rows, columns, config.provenance)
    plot_metrics(rows, outputs[1], provenance=config.provenance)
    if config.timing_sizes:
        timing = run_timing(
            config.timing_sizes,
            config.n_times,
            config.methods,
            repeats=config.timing_repeats,
            seed=config.seed,
            config=config.depth_config(),
        )
        outputs += [config.output_path("timing.csv"), config.output_path("timing.svg")]
        save_metrics(outputs[2], timing, timing_columns, config.provenance)
        plot_metrics(timing, outputs[3], criteria=("runtime_s",), provenance=config.provenance)
    return outputs


def boxplot(config: RunConfig, args):
    _require_input(config)
    dataset = load_csv(config.input)
    summary = run_pipeline(
        dataset,
        config.depth_config(),
        potential=config.potential,
        n_windows=config.windows,
        raster_size=config.raster,
        bandwidth=config.bandwidth,
        method=config.methods[0],
        intensity=config.intensity,
    )
    summary.provenance = config.provenance
    outputs = [config.output_path("boxplot.json")]
    save_boxplot(outputs[0], summary)
    for j in range(dataset.p):
        outputs.append(config.output_path(f"sparse_boxplot_y{j + 1}.svg"))
        plot_sparse_boxplot(summary, dataset, j, outputs[-1], config.provenance)
    for surface in summary.intensity:
        outputs.append(config.output_path(f"intensity_boxplot_y{surface.component + 1}.svg"))
        plot_intensity(surface, outputs[-1], config.provenance)
    print_json(dict(median=summary.median_id, outliers=summary.outliers.to_dict()))
    return outputs


def validate_dataset(config: RunConfig, args):
    _require_input(config)
    dataset = load_csv(config.input, check=False)
    violations = validate(dataset)
    report = dict(
        curves=len(dataset),
        observations=dataset.n_obs,
        p=dataset.p,
        violations=[v._asdict() for v in violations],
    )
    if not violations:
        lengths = durations(dataset).lengths
        report.update(min_duration=float(lengths.min()), max_duration=float(lengths.max()))
        try:
            grid = prepare_grid(dataset, config.n_bins, config.min_count)
            report.update(n_bins=grid.n_bins, empty_bin_fraction=grid.empty_fraction)
        except MFDepthException as e:
            report.update(grid_error=str(e))
    path = config.output_path("validation.json")
    save_json(path, {"provenance": config.provenance, **report})
    print_json(report)
    if violations:
        raise ValidationError(f"{len(violations)} dataset violation(s)", violations)
    return [path]


commands = dict(depth=depth, simulate=simulate, benchmark=benchmark, boxplot=boxplot, validate=validate_dataset)


def exit_with_error(error, code):
    doc = {"error": type(error).__name__, "message": str(error)}
    if getattr(error, "line", None) is not None:
        doc["line"] = error.line
    print(json.dumps(doc), file=sys.stderr)
    sys.exit(code)


def cli(args=None):
    args = parser.parse_args(args)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level)
    overrides = {k: v for k, v in vars(args).items() if k in RunConfig.keys()}
    try:
        config = RunConfig.from_sources(load_config_file(args.config) if args.config else None, overrides)
        outputs = commands[config.command](config, args)
        logger.info("Wrote %s", ", ".join(outputs))
    except ValidationError as e:
        exit_with_error(e, 3)
    except (MFDepthException, ValueError, OSError) as e:
        exit_with_error(e, 1)
