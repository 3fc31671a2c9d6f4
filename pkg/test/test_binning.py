#!/usr/bin/env python3

import logging
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdepth import Dataset, InsufficientDataError, MultiCurve
from mfdepth.binning import (
    BinGrid,
    assign,
    assign_many,
    build_grid,
    default_min_count,
    merge_sparse,
    prepare_grid,
    time_density,
)
from mfdepth.simulate import ModelSpec, generate

logging.basicConfig(level=logging.DEBUG)


def random_dataset(n_curves, n_times, low=0.0, high=1.0, seed=0, p=2):
    rng = np.random.default_rng(seed)
    curves = []
    for i in range(n_curves):
        times = np.sort(rng.uniform(low, high, n_times))
        curves.append(MultiCurve(f"c{i}", times, rng.normal(size=(n_times, p))))
    return Dataset(curves, p=p)


class TestBinGrid(unittest.TestCase):
    def test_uniform_quantiles(self):
        grid = build_grid(random_dataset(100, 20), n_bins=4)
        self.assertEqual(grid.n_bins, 4)
        np.testing.assert_allclose(grid.boundaries, [0, 0.25, 0.5, 0.75, 1], atol=0.05)
        self.assertEqual(grid.counts.sum(), 2000)
        self.assertTrue(np.all(np.abs(grid.counts - 500) <= 2))

    def test_quantiles_follow_mass(self):
        grid = build_grid(random_dataset(50, 10, high=0.5), n_bins=2)
        self.assertGreaterEqual(grid.boundaries[0], 0)
        self.assertLessEqual(grid.boundaries[-1], 0.5)

    def test_auto_bins(self):
        dataset = generate(ModelSpec("I", n_curves=200, n_times=50), seed=0).dataset
        grid = build_grid(dataset)
        self.assertEqual(grid.n_bins, 50)
        self.assertEqual(grid.span, (0.0, 1.0))

    def test_build_errors(self):
        flat = Dataset([MultiCurve("a", [0.5], [[1.0]]), MultiCurve("b", [0.5], [[2.0]])])
        with self.assertRaisesRegex(InsufficientDataError, "zero length"):
            build_grid(flat, n_bins=1)
        with self.assertRaises(InsufficientDataError):
            build_grid(random_dataset(2, 3), n_bins=7)
        with self.assertRaises(ValueError):
            build_grid(random_dataset(2, 3), n_bins=0)

    def test_assign(self):
        grid = BinGrid([0, 0.25, 0.5, 1.0], [3, 3, 3], p=1)
        self.assertEqual(assign(grid, 0.0), 0)
        self.assertEqual(assign(grid, 0.25), 0)
        self.assertEqual(assign(grid, 0.26), 1)
        self.assertEqual(assign(grid, 0.5), 1)
        self.assertEqual(assign(grid, 1.0), 2)
        self.assertEqual(assign_many(grid, [0.1, 0.3, 0.7]).tolist(), [0, 1, 2])
        with self.assertLogs("mfdepth.binning", level="WARNING"):
            self.assertEqual(assign(grid, 1.0 + 1e-9), 2)
        with self.assertLogs("mfdepth.binning", level="WARNING"):
            self.assertEqual(assign(grid, -0.1), 0)

    def test_time_density(self):
        grid = BinGrid(np.linspace(0, 1, 6), [4, 4, 4, 4, 4])
        np.testing.assert_allclose(time_density(grid).density, [0.2] * 5)
        np.testing.assert_allclose(time_density(grid).lengths, [0.2] * 5)
        grid = BinGrid([0, 1, 2, 3], [10, 30, 60])
        np.testing.assert_allclose(time_density(grid).density, [0.1, 0.3, 0.6])
        grid = BinGrid([0, 1, 2, 3], [5, 0, 5])
        self.assertEqual(time_density(grid).density[1], 0)
        self.assertAlmostEqual(grid.empty_fraction, 1 / 3)

    def test_common_grid_equal_counts(self):
        times = np.linspace(0, 1, 20)
        dataset = Dataset([MultiCurve(f"c{i}", times, np.full((20, 2), float(i))) for i in range(40)])
        for n_bins in (20, 10, 5, 4):
            grid = build_grid(dataset, n_bins=n_bins)
            self.assertEqual(grid.counts.tolist(), [800 // n_bins] * n_bins)
            self.assertEqual(grid.empty_fraction, 0)
        self.assertEqual(prepare_grid(dataset, n_bins=20).n_bins, 20)
        self.assertEqual(build_grid(generate(ModelSpec("III"), seed=1).dataset).counts.tolist(), [200] * 50)

    def test_first_time_keeps_weight(self):
        times = np.linspace(0, 1, 5)
        dataset = Dataset([MultiCurve(f"c{i}", times, np.zeros((5, 1))) for i in range(3)], p=1)
        grid = build_grid(dataset, n_bins=5)
        self.assertEqual(grid.lengths[0], 0)
        np.testing.assert_allclose(time_density(grid).lengths, [0.25] * 5)
        grid = BinGrid([0, 1, 1, 3], [2, 2, 2])
        np.testing.assert_allclose(time_density(grid).lengths, [1, 1, 2])
        grid = BinGrid([0, 1, 1, 3], [2, 0, 2])
        np.testing.assert_allclose(time_density(grid).lengths, [1, 0, 2])

    def test_serialization(self):
        grid = BinGrid([0, 0.5, 1], [4, 6], p=2)
        self.assertEqual(BinGrid.from_dict(grid.to_dict()), grid)
        self.assertEqual(grid.to_dict(), dict(boundaries=[0.0, 0.5, 1.0], counts=[4, 6], p=2))
        with self.assertRaises(ValueError):
            BinGrid([0, 1], [1, 2])
        with self.assertRaises(ValueError):
            BinGrid([1, 0, 2], [1, 2])


class TestMerge(unittest.TestCase):
    def test_merge_examples(self):
        merged = merge_sparse(BinGrid([0, 1, 2], [1, 9], p=1), min_count=3)
        self.assertEqual(merged.counts.tolist(), [10])
        self.assertEqual(merged.boundaries.tolist(), [0, 2])

        grid = BinGrid([0, 1, 2, 3], [5, 6, 7], p=1)
        self.assertEqual(merge_sparse(grid, min_count=5), grid)

        merged = merge_sparse(BinGrid([0, 1, 2, 3], [2, 2, 2], p=1), min_count=5)
        self.assertEqual(merged.counts.tolist(), [6])

    def test_merge_smaller_neighbour(self):
        merged = merge_sparse(BinGrid([0, 1, 2, 3, 4], [10, 2, 6, 10], p=1), min_count=5)
        self.assertEqual(merged.counts.tolist(), [10, 8, 10])
        self.assertEqual(merged.boundaries.tolist(), [0, 1, 3, 4])

    def test_merge_errors(self):
        with self.assertRaises(ValueError):
            merge_sparse(BinGrid([0, 1, 2], [5, 5], p=2), min_count=2)
        with self.assertRaises(InsufficientDataError):
            merge_sparse(BinGrid([0, 1, 2], [1, 1], p=1), min_count=5)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 20), min_size=1, max_size=15), st.integers(2, 10))
    def test_merge_conserves_counts(self, counts, min_count):
        grid = BinGrid(np.arange(len(counts) + 1), counts, p=1)
        if sum(counts) < min_count:
            with self.assertRaises(InsufficientDataError):
                merge_sparse(grid, min_count)
            return
        merged = merge_sparse(grid, min_count)
        self.assertEqual(merged.counts.sum(), sum(counts))
        self.assertTrue(np.all(merged.counts >= min_count))
        self.assertEqual(merged.span, grid.span)
        self.assertTrue(set(merged.boundaries.tolist()) <= set(grid.boundaries.tolist()))

    def test_prepare_grid(self):
        self.assertEqual(default_min_count(2), 5)
        self.assertEqual(default_min_count(6), 7)
        dataset = random_dataset(3, 4)
        grid = prepare_grid(dataset, n_bins=4)
        self.assertTrue(np.all(grid.counts >= 5))
        self.assertEqual(grid.counts.sum(), 12)


if __name__ == "__main__":
    unittest.main()
