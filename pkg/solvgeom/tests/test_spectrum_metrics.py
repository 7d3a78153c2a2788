import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from solvgeom.exceptions import (
    DimensionMismatch,
    EmptySpectrum,
    GeometryError,
    NonIncreasingEigenvalues,
    NonPositiveEigenvalue,
    NonPositiveRadius,
    SingleBlockSpectrum,
    TooFewPoints,
    TooFewVertices,
    ZeroDimensionBlock,
)
from solvgeom.services import spectrum_metrics as sm

S1 = sm.build_spectrum([(1, 1.0)])
S2 = sm.build_spectrum([(1, 1.0), (1, 2.0)])
S3 = sm.build_spectrum([(1, 1.0), (1, 2.0), (1, 4.0)])

coordinates = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
plane_points = st.tuples(coordinates, coordinates).map(np.array)


class BuildSpectrumTests(SimpleTestCase):

    def test_two_blocks(self):
        self.assertEqual((S2.n, S2.r, S2.Q), (2, 2, 3.0))

    def test_single_block_of_dimension_two(self):
        spec = sm.build_spectrum([(2, 1.0)])
        self.assertEqual((spec.n, spec.r, spec.Q), (2, 1, 2.0))

    def test_accepts_config_dicts(self):
        spec = sm.build_spectrum([{'dim': 1, 'alpha': 1.0}, {'dim': 1, 'alpha': 2.0}])
        self.assertEqual(spec, S2)

    def test_rejections(self):
        with self.assertRaises(NonIncreasingEigenvalues):
            sm.build_spectrum([(1, 2.0), (1, 1.0)])
        with self.assertRaises(NonIncreasingEigenvalues):
            sm.build_spectrum([(1, 1.0), (1, 1.0)])
        with self.assertRaises(NonPositiveEigenvalue):
            sm.build_spectrum([(1, 0.0)])
        with self.assertRaises(ZeroDimensionBlock):
            sm.build_spectrum([(0, 1.0)])
        with self.assertRaises(EmptySpectrum):
            sm.build_spectrum([])


class BoundaryDistanceTests(SimpleTestCase):

    def test_parabolic_quasimetric_values(self):
        self.assertAlmostEqual(float(sm.dist_Ds(S2, [0, 0], [1, 1])), 1.0)
        self.assertAlmostEqual(float(sm.dist_Ds(S2, [0, 0], [0, 4])), 2.0)
        self.assertAlmostEqual(float(sm.dist_Ds(S2, [0, 0], [3, 4])), 3.0)

    def test_metric_values(self):
        self.assertAlmostEqual(float(sm.dist_D(S2, [0, 0], [3, 4])), 3.0)
        self.assertAlmostEqual(float(sm.dist_D(S2, [0, 0], [0, 4])), 2.0)
        self.assertEqual(float(sm.dist_D(S2, [0, 0], [0, 0])), 0.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            sm.dist_D(S2, [0, 0, 0], [1, 1, 1])

    def test_leaf_space_distance(self):
        self.assertAlmostEqual(float(sm.dist_DY(S2, [4.0], [0.0])), 2.0)
        self.assertEqual(float(sm.dist_DY(S2, [0.0], [0.0])), 0.0)
        self.assertAlmostEqual(float(sm.dist_DY(S3, [4.0, 16.0], [0.0, 0.0])), 2.0)
        with self.assertRaises(SingleBlockSpectrum):
            sm.dist_DY(S1, [1.0], [0.0])

    def test_euclidean_height_distance(self):
        self.assertAlmostEqual(float(sm.dist_De(S2, [0, 0], [1, 0])), 1.0, places=10)
        self.assertAlmostEqual(float(sm.dist_De(S2, [0, 0], [0, 1])), 1.0, places=10)
        golden = math.sqrt((math.sqrt(5.0) + 1.0) / 2.0)
        self.assertAlmostEqual(float(sm.dist_De(S2, [0, 0], [1, 1])), golden, places=10)
        self.assertEqual(float(sm.dist_De(S2, [1, 1], [1, 1])), 0.0)

    def test_small_eigenvalues_reach_large_heights(self):
        spec = sm.build_spectrum([(1, 1e-4), (1, 2e-4)])
        # e^(-2e-4 t) 100^2 = 1 puts the root near 46052, where floats are coarser than 1e-12
        height = float(sm.de_height(spec, [0.0, 0.0], [100.0, 0.0]))
        self.assertAlmostEqual(height / (math.log(100.0) / 1e-4), 1.0, places=9)

    def test_widely_spread_eigenvalues(self):
        spec = sm.build_spectrum([(1, 1e-3), (1, 50.0)])
        x, y = np.array([0.0, 0.0]), np.array([30.0, 2.0])
        height = float(sm.de_height(spec, x, y))
        residual = sum(math.exp(-2.0 * a * height) * d ** 2 for a, d in zip((1e-3, 50.0), y - x))
        self.assertAlmostEqual(residual, 1.0, places=6)

    def test_sandwich_needs_pairs(self):
        with self.assertRaises(TooFewPoints):
            sm.check_norm_sandwich(S2, np.zeros((0, 2)), np.zeros((0, 2)))

    def test_single_block_sandwich_is_tight(self):
        rng = np.random.default_rng(3)
        xs, ys = rng.uniform(-5, 5, size=(200, 1)), rng.uniform(-5, 5, size=(200, 1))
        report = sm.check_norm_sandwich(S1, xs, ys)
        self.assertLessEqual(abs(report['max_lower_violation']), 1e-9)
        self.assertEqual(report['upper_constant'], 1.0)

    def test_sandwich_on_seeded_pairs(self):
        rng = np.random.default_rng(7)
        xs, ys = rng.uniform(-10, 10, size=(10000, 2)), rng.uniform(-10, 10, size=(10000, 2))
        report = sm.check_norm_sandwich(S2, xs, ys)
        self.assertLessEqual(report['max_lower_violation'], 1e-9)
        self.assertLessEqual(report['max_upper_violation'], 1e-9)
        self.assertAlmostEqual(report['upper_constant'], math.sqrt(2.0))
        self.assertEqual(report['count'], 10000)

    def test_quasi_triangle_constant_reported(self):
        rng = np.random.default_rng(11)
        xs, ys, zs = (rng.uniform(-3, 3, size=(2000, 2)) for _ in range(3))
        report = sm.quasi_triangle_constant(S2, xs, ys, zs)
        self.assertEqual(report['theoretical'], 1.0)
        self.assertLessEqual(report['empirical'], 1.0 + 1e-12)

    @given(plane_points, plane_points, plane_points)
    @settings(max_examples=300, deadline=None)
    def test_triangle_inequality(self, x, y, z):
        self.assertLessEqual(float(sm.check_triangle(S2, x, y, z)), 1e-9)

    @given(plane_points, plane_points, st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=300, deadline=None)
    def test_block_dilation_scales_D(self, x, y, lam):
        d = float(sm.dist_D(S2, x, y))
        scaled = float(sm.dist_D(S2, sm.block_dilation(S2, x, lam), sm.block_dilation(S2, y, lam)))
        self.assertAlmostEqual(scaled, lam * d, delta=1e-9 * max(1.0, lam * d))

    @given(plane_points, plane_points)
    @settings(max_examples=200, deadline=None)
    def test_D_is_snowflaked_Ds(self, x, y):
        self.assertAlmostEqual(float(sm.dist_D(S2, x, y)),
                               float(sm.dist_Ds(S2, x, y)) ** S2.alpha1, places=9)


class MeasureAndLengthTests(SimpleTestCase):

    def test_ball_measure_values(self):
        self.assertAlmostEqual(float(sm.ball_measure(S2, 1.0)), 4.0)
        self.assertAlmostEqual(float(sm.ball_measure(S2, 2.0)), 32.0)
        self.assertAlmostEqual(float(sm.ball_measure(S2, 0.5)), 0.5)
        with self.assertRaises(NonPositiveRadius):
            sm.ball_measure(S2, 0.0)

    def test_Q_regularity(self):
        for spec in (S1, S2, S3):
            radii = np.logspace(-1, 1, 9)
            ratio = sm.ball_measure(spec, radii) / (sm.ball_measure(spec, 1.0) * radii ** spec.Q)
            np.testing.assert_allclose(ratio, 1.0, rtol=1e-12)

    def test_horizontal_segment_length_is_refinement_free(self):
        for refinement in (1, 4, 16):
            self.assertAlmostEqual(sm.d_length(S2, [[0, 0], [1, 0]], refinement), 1.0)

    def test_snowflaked_segment_grows_like_sqrt(self):
        for refinement, expected in ((4, 2.0), (16, 4.0), (64, 8.0)):
            self.assertAlmostEqual(sm.d_length(S2, [[0, 0], [0, 1]], refinement), expected, places=9)

    def test_fractional_refinement_rounds_up(self):
        self.assertAlmostEqual(sm.d_length(S2, [[0, 0], [0, 1]], 3.2), sm.d_length(S2, [[0, 0], [0, 1]], 4))
        with self.assertRaises(GeometryError):
            sm.d_length(S2, [[0, 0], [0, 1]], 0)

    def test_too_few_vertices(self):
        with self.assertRaises(TooFewVertices):
            sm.d_length(S2, [[0, 0]])


class FoliationTests(SimpleTestCase):

    def test_leaf_hausdorff(self):
        self.assertAlmostEqual(float(sm.leaf_hausdorff(S2, [0.0], [4.0])), 2.0)
        self.assertEqual(float(sm.leaf_hausdorff(S2, [1.0], [1.0])), 0.0)

    def test_point_to_leaf_matches_hausdorff(self):
        self.assertAlmostEqual(sm.point_to_leaf_distance(S2, [7.0, 0.0], [4.0]), 2.0, places=6)

    def test_parts(self):
        np.testing.assert_array_equal(sm.horizontal_part(S3, [1, 2, 3]), [1])
        np.testing.assert_array_equal(sm.leaf_part(S3, [1, 2, 3]), [2, 3])
