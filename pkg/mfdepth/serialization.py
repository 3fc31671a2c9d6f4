"""
File formats.

Datasets are CSV files with a header ``id,t,y1,...,yp`` and one row per observation. Depth reports are CSV
(``id,method,depth,rank``) or JSON, metrics tables are CSV, boxplot summaries JSON. Lines starting with ``#`` carry
provenance and are skipped by every reader. Any path ending in ``.zst`` is zstandard-compressed.
"""
import csv
import json
import logging
import math
import os
from collections import OrderedDict

import numpy as np

from . import DataFormatError, Dataset, MultiCurve
from .depths import DepthReport, parse_method
from .util import open_text
from .version import __version__

logger = logging.getLogger(__name__)

report_columns = ("id", "method", "depth", "rank")


def _is_json(path):
    path = os.fspath(path)
    return path.endswith(".json") or path.endswith(".json.zst")


def format_float(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _data_lines(fh):
    for line_number, line in enumerate(fh, start=1):
        if line.startswith("#") or not line.strip():
            continue
        yield line_number, line


def _write_provenance(fh, provenance):
    doc = {"version": __version__, **(provenance or {})}
    for key, value in doc.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        fh.write(f"# {key}: {value}\n")


def load_csv(path, check=True) -> Dataset:
    """
    Read a dataset. Rows are grouped by id in order of first appearance and sorted by time within each curve. A
    malformed row or a repeated (id, t) pair raises :class:`mfdepth.DataFormatError` with its line number; the
    assembled dataset is validated before it is returned unless ``check`` is false.
    """
    with open_text(path) as fh:
        lines = list(_data_lines(fh))
    if not lines:
        raise DataFormatError("File has no header row", line=1)
    header_line, header = lines[0]
    fields = next(csv.reader([header]))
    fields = [f.strip() for f in fields]
    if len(fields) < 3 or fields[:2] != ["id", "t"]:
        raise DataFormatError("Expected a header id,t,y1,...,yp", line=header_line)
    p = len(fields) - 2
    observations = OrderedDict()
    seen = set()
    for line_number, line in lines[1:]:
        row = next(csv.reader([line]))
        if len(row) != p + 2:
            raise DataFormatError(f"Expected {p + 2} fields, got {len(row)}", line=line_number)
        curve_id = row[0].strip()
        try:
            t = float(row[1])
            y = [float(v) for v in row[2:]]
        except ValueError as e:
            raise DataFormatError(f"Could not parse number: {e}", line=line_number)
        if (curve_id, t) in seen:
            raise DataFormatError(f"Duplicate observation of curve {curve_id} at t={row[1].strip()}", line=line_number)
        seen.add((curve_id, t))
        observations.setdefault(curve_id, []).append((t, y))
    curves = []
    for curve_id, obs in observations.items():
        obs.sort(key=lambda o: o[0])
        curves.append(MultiCurve.from_obs(curve_id, obs))
    dataset = Dataset(curves, p=p)
    logger.info("Loaded %d curves with %d observations from %s", len(dataset), dataset.n_obs, path)
    return dataset.check() if check else dataset


def save_dataset(path, dataset: Dataset, provenance=None):
    with open_text(path, "wt") as fh:
        _write_provenance(fh, provenance)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "t"] + [f"y{j + 1}" for j in range(dataset.p)])
        for curve in dataset.curves:
            for t, y in zip(curve.times, curve.values):
                writer.writerow([curve.id, format_float(t)] + [format_float(v) for v in y])


def save_report(path, reports, provenance=None):
    """
    Write one or several depth reports. CSV rows follow ``id,method,depth,rank``; JSON holds one entry per method.
    """
    if isinstance(reports, DepthReport):
        reports = [reports]
    if _is_json(path):
        doc = dict(
            provenance={"version": __version__, **(provenance or {})},
            reports=[
                dict(
                    method=r.method.name,
                    beta=r.beta,
                    ids=r.ids,
                    depths=[None if math.isnan(d) else float(d) for d in r.depths],
                    ranks=[float(x) for x in r.ranks],
                )
                for r in reports
            ],
        )
        save_json(path, doc)
        return
    with open_text(path, "wt") as fh:
        _write_provenance(fh, provenance)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(report_columns)
        for report in reports:
            for row in report.to_rows():
                writer.writerow([row["id"], row["method"], format_float(row["depth"]), format_float(row["rank"])])


def load_report(path):
    """
    Read depth reports written by :func:`save_report`, returned as a dict of method to :class:`DepthReport`.
    """
    if _is_json(path):
        doc = load_json(path)
        reports = {}
        for entry in doc["reports"]:
            depths = [math.nan if d is None else d for d in entry["depths"]]
            method = parse_method(entry["method"])
            reports[method] = DepthReport(entry["ids"], depths, method, beta=entry.get("beta"))
        return reports
    rows = OrderedDict()
    for _, row in _read_table(path, report_columns):
        rows.setdefault(row["method"], []).append(row)
    reports = {}
    for name, method_rows in rows.items():
        method = parse_method(name)
        reports[method] = DepthReport([r["id"] for r in method_rows], [float(r["depth"]) for r in method_rows], method)
    return reports


def _read_table(path, expected_columns=None):
    with open_text(path) as fh:
        lines = list(_data_lines(fh))
    if not lines:
        raise DataFormatError("File has no header row", line=1)
    header = next(csv.reader([lines[0][1]]))
    if expected_columns is not None and tuple(header) != tuple(expected_columns):
        raise DataFormatError(f"Expected columns {','.join(expected_columns)}", line=lines[0][0])
    for line_number, line in lines[1:]:
        values = next(csv.reader([line]))
        if len(values) != len(header):
            raise DataFormatError(f"Expected {len(header)} fields, got {len(values)}", line=line_number)
        yield line_number, dict(zip(header, values))


def save_metrics(path, rows, columns, provenance=None):
    """
    Write result rows (objects with ``to_row()`` or dicts) as CSV with the given columns.
    """
    with open_text(path, "wt") as fh:
        _write_provenance(fh, provenance)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            row = row.to_row() if hasattr(row, "to_row") else row
            writer.writerow([format_float(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


def load_metrics(path):
    """
    Read a metrics CSV into a list of dicts. Numeric fields are converted to float or int.
    """

    def convert(value):
        for kind in (int, float):
            try:
                return kind(value)
            except ValueError:
                pass
        return value

    return [{k: convert(v) for k, v in row.items()} for _, row in _read_table(path)]


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, set):
        return sorted(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_json(path, doc):
    with open_text(path, "wt") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def load_json(path):
    with open_text(path) as fh:
        return json.load(fh)


def save_boxplot(path, summary, provenance=None):
    doc = summary.to_dict()
    doc["provenance"] = {"version": __version__, **(provenance or summary.provenance or {})}
    save_json(path, doc)
