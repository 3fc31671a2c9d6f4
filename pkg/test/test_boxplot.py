#!/usr/bin/env python3

import json
import logging
import os
import tempfile
import unittest

import numpy as np

import mfdepth
from mfdepth import Dataset, InsufficientDataError, MultiCurve
from mfdepth.binning import BinGrid, assign_many, prepare_grid
from mfdepth.boxplot import (
    CentralRegion,
    central_region,
    domain_outliers,
    functional_outliers,
    intensity_boxplot,
    nonoutlying_bounds,
    observed_proportions,
    potential_outliers,
    run_pipeline,
    sparse_boxplot,
)
from mfdepth.config import RunConfig
from mfdepth.depths import DepthReport, compute_depth
from mfdepth.plotting import plot_intensity, plot_metrics, plot_sparse_boxplot
from mfdepth.serialization import load_json, save_boxplot
from mfdepth.simulate import ContaminationSpec, ModelSpec, contaminate, generate

try:
    import jsonschema
except ImportError:
    jsonschema = None

logging.basicConfig(level=logging.DEBUG)

schema_path = os.path.join(os.path.dirname(mfdepth.__file__), "schemas", "boxplot.schema.json")


def flat_region(lower=0.0, upper=2.0, p=1):
    grid = BinGrid([0, 1], [1], p=p)
    return CentralRegion(grid, np.full((1, p), lower), np.full((1, p), upper), "c0", ["c0"])


def lattice_dataset(n_curves, times):
    return Dataset(
        [MultiCurve(f"c{i}", times, np.full((len(times), 1), i / max(n_curves - 1, 1))) for i in range(n_curves)]
    )


class TestDomainAndPotential(unittest.TestCase):
    def test_domain_outliers(self):
        equal = Dataset([MultiCurve(f"c{i}", [0, 1], [[i], [i]]) for i in range(20)])
        self.assertEqual(domain_outliers(equal), set())
        long = Dataset(list(equal.curves[:19]) + [MultiCurve("long", [0, 100], [[0], [0]])])
        self.assertEqual(domain_outliers(long), {"long"})
        short = Dataset(list(equal.curves[:19]) + [MultiCurve("point", [0.5], [[0]])])
        self.assertIn("point", domain_outliers(short))

    def test_domain_both_tails(self):
        rng = np.random.default_rng(0)
        lengths = list(rng.uniform(9, 11, 60)) + [2.5, 3.0, 22.0, 25.0]
        dataset = Dataset([MultiCurve(f"c{i}", [0, d], [[0], [1]]) for i, d in enumerate(lengths)])
        flagged = domain_outliers(dataset)
        self.assertTrue({"c60", "c61", "c62", "c63"} <= flagged)

    def test_potential_outliers(self):
        ids = [f"c{i}" for i in range(20)]
        depths = np.linspace(0, 1, 20)
        integrated = DepthReport(ids, depths, "GMFID_wt")
        most, second = potential_outliers(integrated, DepthReport(ids, depths, "GMFED"))
        self.assertEqual(most, {"c0", "c1"})
        self.assertEqual(second, set())
        most, second = potential_outliers(integrated, DepthReport(ids, depths[::-1], "GMFED"))
        self.assertEqual(most, set())
        self.assertEqual(second, {"c0", "c1", "c18", "c19"})
        with self.assertRaises(ValueError):
            potential_outliers(integrated, DepthReport(ids[:10], depths[:10], "GMFED"))

    def test_potential_sizes(self):
        rng = np.random.default_rng(1)
        ids = [f"c{i}" for i in range(627)]
        most, second = potential_outliers(
            DepthReport(ids, rng.uniform(size=627), "GMFID_wt"), DepthReport(ids, rng.uniform(size=627), "GMFED")
        )
        self.assertFalse(most & second)
        self.assertEqual(2 * len(most) + len(second), 2 * 62)


class TestCentralRegion(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.dataset = generate(ModelSpec("I", n_curves=40, n_times=15), seed=2).dataset
        cls.grid = prepare_grid(cls.dataset)
        cls.report = compute_depth(cls.dataset, "LMFID_wt")

    def test_region_replay(self):
        region = central_region(self.dataset, self.report, self.grid)
        self.assertEqual(len(region.members), 20)
        self.assertEqual(region.median_id, self.report.median_id)
        self.assertEqual(set(region.members), set(self.report.deepest(20)))
        members = np.stack([self.dataset[i].values for i in region.members])
        bins = assign_many(self.grid, self.dataset.curves[0].times)
        for k in range(self.grid.n_bins):
            np.testing.assert_allclose(region.lower[k], members[:, bins == k].reshape(-1, 2).min(axis=0))
            np.testing.assert_allclose(region.upper[k], members[:, bins == k].reshape(-1, 2).max(axis=0))
        self.assertTrue(np.all(region.range >= 0))

    def test_classical_reduction(self):
        times = self.dataset.curves[0].times
        edges = np.concatenate([[0], (times[:-1] + times[1:]) / 2, [1]])
        region = central_region(self.dataset, self.report, BinGrid(edges, np.full(len(times), 40), p=2))
        members = np.stack([self.dataset[i].values for i in region.members])
        lower, upper = members.min(axis=0), members.max(axis=0)
        width = upper - lower
        expected = {
            c.id for c in self.dataset if np.any((c.values > upper + 1.5 * width) | (c.values < lower - 1.5 * width))
        }
        self.assertEqual(functional_outliers(self.dataset, region), expected)

    def test_two_curves(self):
        pair = self.dataset.subset(self.dataset.ids[:2])
        report = compute_depth(pair, "LMFID_wt", mfdepth.depths.DepthConfig(n_bins=1, min_count=3))
        region = central_region(pair, report, BinGrid(np.linspace(0, 1, 16), np.ones(15), p=2))
        self.assertEqual(region.members, [report.median_id])
        self.assertTrue(np.all(region.range[1:] == 0))

    def test_fences(self):
        region = flat_region(0.0, 1.0)
        inside = MultiCurve("inside", [0.2, 0.8], [[0.1], [0.9]])
        above = MultiCurve("above", [0.2, 0.8], [[0.5], [3.0]])
        below = MultiCurve("below", [0.5], [[-1.6]])
        flagged = functional_outliers(Dataset([inside, above, below]), region)
        self.assertEqual(flagged, {"above", "below"})

    def test_nonoutlying_bounds(self):
        region = central_region(self.dataset, self.report, self.grid)
        everything = nonoutlying_bounds(self.dataset, set(), self.grid)
        with np.errstate(invalid="ignore"):
            self.assertTrue(np.all(everything.upper >= region.upper))
            self.assertTrue(np.all(everything.lower <= region.lower))
        top = self.dataset.curves[int(np.argmax([c.values[:, 0].max() for c in self.dataset]))]
        trimmed = nonoutlying_bounds(self.dataset, {top.id}, self.grid)
        self.assertLess(np.nanmax(trimmed.upper[:, 0]), np.nanmax(everything.upper[:, 0]))
        empty = nonoutlying_bounds(self.dataset, set(self.dataset.ids), self.grid)
        self.assertTrue(np.all(np.isnan(empty.lower)))

    def test_errors(self):
        with self.assertRaises(ValueError):
            central_region(self.dataset.subset(self.dataset.ids[:5]), self.report, self.grid)
        with self.assertRaises(InsufficientDataError):
            central_region(Dataset([], p=2), DepthReport([], [], "GMFID_wt"), self.grid)


class TestSparseBoxplot(unittest.TestCase):
    def test_dense_grid(self):
        dataset = lattice_dataset(5, np.linspace(0, 1, 10))
        np.testing.assert_allclose(observed_proportions(dataset, np.linspace(0, 1, 11)), 1)
        data = sparse_boxplot(dataset, flat_region(0.0, 2.0), n_windows=10)
        np.testing.assert_allclose(data.proportions, 1)
        np.testing.assert_allclose(data.line, data.upper)
        np.testing.assert_allclose(data.half_line, 1)
        self.assertEqual(len(data.midpoints), 10)

    def test_clipping(self):
        dataset = lattice_dataset(3, np.linspace(0, 1, 20))
        np.testing.assert_allclose(observed_proportions(dataset, np.linspace(0, 1, 11)), 1)

    def test_half_observed(self):
        full = lattice_dataset(2, np.linspace(0, 1, 10)).curves
        single = [MultiCurve(f"s{i}", [0.0], [[0.5]]) for i in range(2)]
        data = sparse_boxplot(Dataset(list(full) + single), flat_region(0.0, 2.0), n_windows=10)
        self.assertEqual(data.proportions[0], 1)
        np.testing.assert_allclose(data.proportions[1:], 0.5)
        self.assertAlmostEqual(data.smoothed[1], 2 / 3)
        np.testing.assert_allclose(data.line[3:, 0], data.half_line[3:, 0])
        self.assertTrue(np.all((data.line >= data.lower) & (data.line <= data.upper)))
        with self.assertRaises(ValueError):
            sparse_boxplot(Dataset(full), flat_region(), n_windows=-1)

    def test_half_line_smoothed(self):
        grid = BinGrid([0, 0.25, 0.5, 0.75, 1], [4, 4, 4, 4], p=1)
        lower = np.array([[0.0], [0.0], [2.0], [2.0]])
        region = CentralRegion(grid, lower, lower + 2, "c0", ["c0"])
        data = sparse_boxplot(lattice_dataset(2, np.linspace(0, 1, 8)), region, n_windows=4)
        np.testing.assert_allclose(data.half_line[:, 0], [1, 5 / 3, 7 / 3, 3])
        np.testing.assert_allclose(data.line, data.upper)
        self.assertTrue(np.all((data.half_line >= data.lower) & (data.half_line <= data.upper)))


class TestIntensity(unittest.TestCase):
    def test_single_point(self):
        dataset = Dataset([MultiCurve("a", [0.5], [[0.5]])])
        (surface,) = intensity_boxplot(dataset, flat_region(0.0, 1.0), raster_size=10)
        np.testing.assert_allclose(surface.at_points, [1])
        values = surface.sparseness[~np.isnan(surface.sparseness)]
        self.assertTrue(np.all((values >= 0) & (values <= 1)))
        self.assertEqual(surface.observed.shape, (10, 10))

    def test_no_points_inside(self):
        dataset = Dataset([MultiCurve("a", [0.5], [[5.0]])])
        with self.assertRaises(InsufficientDataError):
            intensity_boxplot(dataset, flat_region(0.0, 1.0), raster_size=10)

    def test_uniform_observations(self):
        dataset = lattice_dataset(30, np.linspace(0, 1, 30))
        (surface,) = intensity_boxplot(dataset, flat_region(0.0, 1.0), raster_size=20)
        interior = surface.sparseness[5:15, 5:15]
        self.assertLess(np.median(interior), 0.35)
        self.assertLess(np.ptp(interior), 0.05)
        self.assertEqual(len(surface.bandwidth), 2)
        (fixed,) = intensity_boxplot(dataset, flat_region(0.0, 1.0), bandwidth=(0.1, 0.1), raster_size=20)
        self.assertEqual(fixed.bandwidth, (0.1, 0.1))

    def test_workers(self):
        rng = np.random.default_rng(4)
        dataset = Dataset(
            [MultiCurve(f"c{i}", np.linspace(0, 1, 10), rng.uniform(0.2, 0.8, (10, 2))) for i in range(6)], p=2
        )
        serial = intensity_boxplot(dataset, flat_region(0.0, 1.0, p=2), raster_size=8)
        threaded = intensity_boxplot(dataset, flat_region(0.0, 1.0, p=2), raster_size=8, workers=2)
        self.assertEqual([s.component for s in threaded], [0, 1])
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.at_points, b.at_points)


class TestPipeline(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        clean = generate(ModelSpec("I", n_curves=100, n_times=20), seed=3)
        cls.contamination = contaminate(clean, ContaminationSpec("magnitude_I", 0.1), seed=4)
        cls.dataset = cls.contamination.dataset

    def test_functional_capture(self):
        summary = run_pipeline(self.dataset, potential=False, raster_size=15)
        caught = set(self.contamination.outliers) & summary.outliers.functional
        self.assertGreaterEqual(len(caught) / len(self.contamination.outliers), 0.9)
        self.assertEqual(summary.outliers.potential1, set())
        self.assertFalse(set(summary.region.members) & summary.outliers.all)

    def test_stages(self):
        summary = run_pipeline(self.dataset, potential=True, raster_size=15)
        outliers = summary.outliers
        self.assertFalse(outliers.potential1 & outliers.potential2)
        self.assertEqual(2 * len(outliers.potential1) + len(outliers.potential2), 2 * 10)
        removed = outliers.domain | outliers.potential1 | outliers.potential2
        self.assertFalse(set(summary.region.members) & removed)
        self.assertNotIn(summary.median_id, outliers.all)
        self.assertEqual(len(summary.intensity), 2)
        self.assertTrue(np.all((summary.sparse.proportions >= 0) & (summary.sparse.proportions <= 1)))

        summary.provenance = RunConfig().provenance
        doc = summary.to_dict()
        if jsonschema is not None:
            with open(schema_path) as fh:
                jsonschema.validate(doc, json.load(fh))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "boxplot.json")
            save_boxplot(path, summary)
            loaded = load_json(path)
        self.assertEqual(loaded["median_id"], summary.median_id)
        self.assertEqual(loaded["outliers"]["functional"], sorted(outliers.functional))
        self.assertEqual(loaded["provenance"]["config_hash"], RunConfig().config_hash)
        self.assertEqual(loaded["provenance"]["config"], RunConfig().to_dict())

    def test_small_samples(self):
        few = self.dataset.subset(self.dataset.ids[:8])
        summary = run_pipeline(few, potential=True, intensity=False, n_windows=5)
        self.assertEqual(summary.outliers.potential1 | summary.outliers.potential2, set())
        self.assertEqual(summary.intensity, [])
        self.assertEqual(len(summary.sparse.proportions), 5)
        with self.assertRaises(InsufficientDataError):
            run_pipeline(self.dataset.subset(self.dataset.ids[:1]), potential=False)

    @unittest.skipUnless(jsonschema, "jsonschema is not installed")
    def test_schema_rejects_bad_documents(self):
        with open(schema_path) as fh:
            schema = json.load(fh)
        summary = run_pipeline(self.dataset, potential=False, intensity=False)
        summary.provenance = RunConfig().provenance
        doc = summary.to_dict()
        doc["sparse_boxplot"]["proportions"][0] = 1.5
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(doc, schema)


class TestPlotting(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        clean = generate(ModelSpec("III", n_curves=60, n_times=15), seed=5)
        cls.dataset = contaminate(clean, ContaminationSpec("magnitude_I", 0.1), seed=6).dataset
        cls.summary = run_pipeline(cls.dataset, potential=True, raster_size=10)

    def test_sparse_boxplot_svg(self):
        with tempfile.TemporaryDirectory() as tmp:
            first, second = os.path.join(tmp, "a.svg"), os.path.join(tmp, "b.svg")
            config = RunConfig(seed=1)
            for path in (first, second):
                plot_sparse_boxplot(self.summary, self.dataset, 0, path, provenance=config.provenance)
            with open(first, "rb") as fh:
                content = fh.read()
            with open(second, "rb") as fh:
                self.assertEqual(content, fh.read())
        svg = content.decode()
        self.assertIn(config.config_hash, svg)
        self.assertIn("n_dirs", svg)
        self.assertIn('id="median"', svg)
        self.assertIn('id="region-lower"', svg)
        for curve_id in self.summary.outliers.functional:
            self.assertIn(f'id="outlier-functional-{curve_id}"', svg)

    def test_intensity_and_metrics_svg(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "intensity.svg")
            plot_intensity(self.summary.intensity[1], path)
            self.assertGreater(os.path.getsize(path), 0)
            rows = [dict(method=m, capture=v) for m, v in (("GMFED", 0.5), ("LMFED", float("nan")), ("GMFED", 1.0))]
            path = os.path.join(tmp, "metrics.svg")
            plot_metrics(rows, path, criteria=("capture",))
            self.assertGreater(os.path.getsize(path), 0)


if __name__ == "__main__":
    unittest.main()
