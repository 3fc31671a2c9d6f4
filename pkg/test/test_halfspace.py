#!/usr/bin/env python3

import logging
import math
import os
import time
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdepth.halfspace import (
    depth_1d,
    depth_2d_exact,
    depth_nd_approx,
    halfspace_depth,
    random_directions,
    region_volume,
)

logging.basicConfig(level=logging.DEBUG)


def brute_force_depth(x, cloud):
    """
    Exact bivariate depth by checking one normal direction inside every open arc between critical directions.
    """
    diff = np.asarray(cloud, dtype=float) - np.asarray(x, dtype=float)
    angles = np.arctan2(diff[:, 1], diff[:, 0])
    critical = np.sort(np.mod(np.concatenate([angles + math.pi / 2, angles - math.pi / 2]), 2 * math.pi))
    midpoints = (critical + np.roll(critical, -1)) / 2
    midpoints[-1] = np.mod((critical[-1] + critical[0] + 2 * math.pi) / 2, 2 * math.pi)
    normals = np.column_stack([np.cos(midpoints), np.sin(midpoints)])
    return min(np.sum(diff @ normals.T >= 0, axis=0)) / len(cloud)


def grid_depth(x, cloud, n_dirs=10_000):
    diff = np.asarray(cloud, dtype=float) - np.asarray(x, dtype=float)
    angles = np.linspace(0, 2 * math.pi, n_dirs, endpoint=False)
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    return min(np.sum(diff @ normals.T >= 0, axis=0)) / len(cloud)


class TestUnivariate(unittest.TestCase):
    def test_examples(self):
        self.assertAlmostEqual(depth_1d(2, [1, 2, 3]), 2 / 3)
        self.assertEqual(depth_1d(10, [1, 2, 3]), 0)
        self.assertAlmostEqual(depth_1d(1.5, [1, 2, 3, 4]), 1 / 4)
        self.assertEqual(depth_1d(5, [5]), 1)
        np.testing.assert_allclose(halfspace_depth([[1], [2], [3]], [[1], [2], [3]]), [1 / 3, 2 / 3, 1 / 3])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.floats(-100, 100))
    def test_range(self, cloud, x):
        depth = depth_1d(x, cloud)
        self.assertGreaterEqual(depth, 0)
        self.assertLessEqual(depth, (len(cloud) + cloud.count(x)) / (2 * len(cloud)))
        if x < min(cloud) or x > max(cloud):
            self.assertEqual(depth, 0)


class TestBivariate(unittest.TestCase):
    def test_examples(self):
        square = [[1, 1], [1, -1], [-1, 1], [-1, -1]]
        self.assertEqual(depth_2d_exact([0, 0], square), 0.5)
        self.assertEqual(depth_2d_exact([3, 0], square), 0)
        self.assertEqual(depth_2d_exact([1, 1], square), 0.25)
        self.assertEqual(depth_2d_exact([0.2, -0.3], [[0.2, -0.3]]), 1)
        self.assertAlmostEqual(depth_2d_exact([0, 0], [[0, 0], [0, 0], [1, 0]]), 2 / 3)
        with self.assertRaises(ValueError):
            depth_2d_exact([0, 0], np.zeros((3, 3)))

    def test_against_brute_force(self):
        rng = np.random.default_rng(42)
        for trial in range(200):
            n = int(rng.integers(3, 201))
            cloud = rng.normal(size=(n, 2)) * rng.uniform(0.5, 3, 2)
            x = rng.normal(size=2)
            exact = depth_2d_exact(x, cloud)
            self.assertAlmostEqual(exact, brute_force_depth(x, cloud), msg=f"trial {trial}")
            self.assertGreaterEqual(grid_depth(x, cloud) + 1e-12, exact)

    def test_vectorised(self):
        rng = np.random.default_rng(3)
        cloud = rng.normal(size=(60, 2))
        queries = rng.normal(size=(25, 2))
        expected = [depth_2d_exact(q, cloud) for q in queries]
        np.testing.assert_array_equal(halfspace_depth(queries, cloud), expected)
        self.assertEqual(halfspace_depth(np.zeros((0, 2)), cloud).shape, (0,))

    def test_vanishing(self):
        rng = np.random.default_rng(5)
        cloud = rng.normal(size=(100, 2))
        depths = [depth_2d_exact([k, k], cloud) for k in (0, 1, 2, 5, 50)]
        self.assertEqual(depths[-1], 0)
        self.assertGreaterEqual(depths[0], depths[1])

    @unittest.skipUnless("MFDEPTH_SLOW_TESTS" in os.environ, "Skipping timing test")
    def test_speed(self):
        rng = np.random.default_rng(1)
        cloud = rng.normal(size=(1000, 2))
        queries = rng.normal(size=(200, 2))
        start = time.perf_counter()
        halfspace_depth(queries, cloud)
        self.assertLess((time.perf_counter() - start) / len(queries), 0.005)

    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.2, 5),
        st.floats(-math.pi, math.pi),
        st.floats(-10, 10),
        st.floats(-10, 10),
    )
    def test_similarity_invariance(self, seed, scale, angle, shift_x, shift_y):
        rng = np.random.default_rng(seed)
        cloud = rng.normal(size=(40, 2))
        x = rng.normal(size=2)
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        shift = np.array([shift_x, shift_y])
        moved = scale * cloud @ rotation.T + shift
        self.assertAlmostEqual(depth_2d_exact(x, cloud), depth_2d_exact(scale * rotation @ x + shift, moved))


class TestProjections(unittest.TestCase):
    def test_directions(self):
        directions = random_directions(3, 100, seed=0)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1)
        np.testing.assert_array_equal(directions, random_directions(3, 100, seed=0))

    def test_upper_bound_and_convergence(self):
        rng = np.random.default_rng(7)
        cloud = rng.normal(size=(150, 2))
        queries = rng.normal(size=(100, 2))
        for q in queries:
            exact = depth_2d_exact(q, cloud)
            approx = depth_nd_approx(q, cloud, n_dirs=2000, seed=1)
            self.assertGreaterEqual(approx, exact)
            self.assertLessEqual(approx - exact, 0.02)

    def test_determinism(self):
        rng = np.random.default_rng(9)
        cloud = rng.normal(size=(50, 3))
        self.assertEqual(depth_nd_approx([0, 0, 0], cloud, n_dirs=1, seed=4), depth_nd_approx([0, 0, 0], cloud, 1, 4))
        self.assertEqual(depth_nd_approx([100, 0, 0], cloud, n_dirs=50), 0)
        with self.assertRaises(ValueError):
            depth_nd_approx([0, 0, 0], cloud, n_dirs=0)
        depths = halfspace_depth(cloud, cloud, n_dirs=200, seed=2)
        self.assertEqual(depths.shape, (50,))
        self.assertTrue(np.all((depths >= 1 / 50) & (depths <= 0.5 + 1 / 50)))


class TestRegionVolume(unittest.TestCase):
    def test_univariate(self):
        self.assertEqual(region_volume([0, 1, 2, 3, 4], 0.25), 2)
        self.assertEqual(region_volume([0, 1, 2, 3, 4], 0.6), 0)

    def test_bivariate(self):
        square_and_center = [[1, 1], [1, -1], [-1, 1], [-1, -1], [0, 0]]
        self.assertAlmostEqual(region_volume(square_and_center, 0.1), 4)
        self.assertEqual(region_volume(square_and_center, 0.25), 0)
        collinear = [[0, 0], [1, 1], [2, 2], [3, 3], [4, 4]]
        self.assertEqual(region_volume(collinear, 0.1), 0)
        with self.assertRaises(ValueError):
            region_volume(square_and_center, 1.5)

    def test_scaling(self):
        rng = np.random.default_rng(0)
        cloud = rng.normal(size=(200, 2))
        self.assertAlmostEqual(region_volume(2 * cloud, 0.25), 4 * region_volume(cloud, 0.25))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.lists(st.floats(0.01, 0.6), min_size=2, max_size=6))
    def test_shrinks_with_beta(self, seed, p, betas):
        cloud = np.random.default_rng(seed).standard_t(5, size=(60, p))
        volumes = [region_volume(cloud, beta, n_dirs=200, seed=seed) for beta in sorted(betas)]
        self.assertTrue(all(a >= b - 1e-12 for a, b in zip(volumes, volumes[1:])), volumes)


class TestRay(unittest.TestCase):
    def test_nonincreasing_along_rays(self):
        rng = np.random.default_rng(9)
        half = rng.normal(size=(40, 2)) @ np.array([[2.0, 0.5], [0.0, 1.0]])
        cloud = np.concatenate([half, -half])
        for direction in random_directions(2, 12, seed=3):
            queries = np.linspace(0, 6, 40)[:, None] * direction
            depths = halfspace_depth(queries, cloud)
            self.assertAlmostEqual(depths[0], depths.max())
            self.assertTrue(np.all(np.diff(depths) <= 1e-12), depths)


if __name__ == "__main__":
    unittest.main()
