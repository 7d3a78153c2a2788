import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from solvgeom.exceptions import BasepointDegenerate, GeometryError, IdenticalPoints, TooFewPoints, TooManyBlocks
from solvgeom.models import BoundaryPoint, GroupPoint, SampledSpace, VisualParams
from solvgeom.models.sampled_space import METRIC, QUASIMETRIC
from solvgeom.services import boundary_constructions as bc
from solvgeom.services.spectrum_metrics import build_spectrum

S1 = build_spectrum([(1, 1.0)])


def line_space(positions, kind=METRIC):
    positions = np.asarray(positions, dtype=float)
    return SampledSpace(
        labels=[f'{p:g}' for p in positions],
        dist=np.abs(positions[:, None] - positions[None, :]),
        kind=kind,
    )


class ChainMetrizationTests(SimpleTestCase):

    def test_closes_triangle_violations(self):
        quasi = SampledSpace(labels=['a', 'b', 'c'], dist=[[0, 1, 3], [1, 0, 1], [3, 1, 0]], kind=QUASIMETRIC)
        metric = bc.chain_metrize(quasi)
        self.assertEqual(metric.kind, METRIC)
        self.assertEqual(metric.dist[0, 2], 2.0)
        self.assertLessEqual(metric.triangle_violation(), 1e-12)

    def test_keeps_a_metric(self):
        space = line_space([0, 1, 2.5, 4])
        np.testing.assert_allclose(bc.chain_metrize(space).dist, space.dist)


class InversionTests(SimpleTestCase):

    def test_inversion_of_the_line_at_zero(self):
        positions = np.array([1.0, 2.0, 4.0, 5.0])
        space = line_space(np.concatenate([[0.0], positions]))
        inverted = bc.invert_metric(space, '0')
        self.assertEqual(inverted.basepoint, '0')
        self.assertNotIn('0', inverted.labels)
        np.testing.assert_allclose(inverted.dist, np.abs(1 / positions[:, None] - 1 / positions[None, :]),
                                   atol=1e-15)
        band = inverted.meta['sandwich']
        self.assertTrue(band['holds'])
        self.assertAlmostEqual(band['min'], 1.0)

    def test_inversion_rejects_duplicate_of_center(self):
        space = SampledSpace(labels=['p', 'q', 'r'], dist=[[0, 0, 1], [0, 0, 1], [1, 1, 0]], kind=QUASIMETRIC)
        with self.assertRaises(BasepointDegenerate):
            bc.invert_metric(space, 'p')

    def test_sphericalization_adds_infinity(self):
        space = line_space([0, 0.5, 1, 3, 7])
        spherical = bc.sphericalize(space, '0')
        self.assertEqual(spherical.labels[-1], bc.INFINITY_LABEL)
        self.assertEqual(spherical.size, space.size + 1)
        self.assertTrue(spherical.meta['sandwich']['holds'])
        # Everything stays within distance 1 of the added point
        self.assertLessEqual(float(np.max(spherical.dist[-1])), 1.0)

    def test_invert_then_sphericalize(self):
        space = line_space([0, 0.5, 1, 2, 3])
        spherical, band = bc.invert_then_sphericalize(space, '0', '1')
        self.assertIn(bc.INFINITY_LABEL, spherical.labels)
        self.assertEqual(band['count'], 10)
        self.assertGreaterEqual(band['ratio'], 1.0)
        self.assertTrue(math.isfinite(band['ratio']))

        with self.assertRaises(GeometryError):
            bc.invert_then_sphericalize(space, '1', '1')

    def test_sphericalized_measure_weight(self):
        np.testing.assert_allclose(bc.sphericalized_measure_weight(2.0, [0.0, 1.0]), [1.0, 2.0 ** -4])
        with self.assertRaises(GeometryError):
            bc.sphericalized_measure_weight(1.0, [0.0])


class CrossRatioTests(SimpleTestCase):

    def test_cross_ratio_on_the_line(self):
        space = line_space([0, 1, 2, 3])
        value = bc.cross_ratio(space.dist, np.array([[0, 1, 2, 3]]))
        self.assertAlmostEqual(float(value[0]), 4.0 / 3.0)

    def test_sample_quadruples_are_distinct(self):
        quads = bc.sample_quadruples(6, 50, np.random.default_rng(3))
        self.assertEqual(quads.shape, (50, 4))
        for row in quads:
            self.assertEqual(len(set(row)), 4)
        with self.assertRaises(GeometryError):
            bc.sample_quadruples(3, 1, np.random.default_rng(3))

    def test_identity_has_no_distortion(self):
        space = line_space([0, 1, 2.5, 4, 7, 11])
        quads = bc.sample_quadruples(space.size, 40, np.random.default_rng(9))
        result = bc.crossratio_distortion(space, space, quads)
        self.assertAlmostEqual(result['max_ratio'], 1.0, places=12)
        self.assertEqual(result['skipped'], 0)
        self.assertEqual(result['count'], 40)


class GromovProductTests(SimpleTestCase):

    def test_ends_of_a_vertical_line(self):
        base = GroupPoint([0.0], 0.0)
        product = bc.gromov_product_profile(S1, BoundaryPoint.xi0(), BoundaryPoint([0.0]), base)
        self.assertAlmostEqual(product['value'], 0.0, places=12)
        self.assertAlmostEqual(product['spread'], 0.0, places=12)

    def test_same_point(self):
        base = GroupPoint([0.0], 0.0)
        with self.assertRaises(IdenticalPoints):
            bc.gromov_product(S1, BoundaryPoint([1.0]), BoundaryPoint([1.0]), base)
        self.assertEqual(bc.visual_quasimetric(S1, base, 0.2, BoundaryPoint([1.0]), BoundaryPoint([1.0])), 0.0)

    def test_default_thresholds(self):
        expected = 1.0 / (4.0 * math.log(1.0 + math.sqrt(2.0)) + 1.0)
        self.assertAlmostEqual(bc.epsilon0(S1), expected)
        self.assertAlmostEqual(bc.epsilon1(S1), expected)


class ParabolicTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.profile = bc.TopHeightProfile(S1)

    def test_half_plane_top_height(self):
        # Semicircle of radius 1/2 over [0, 1]
        self.assertAlmostEqual(self.profile([1.0]), math.log(0.5), delta=1e-2)

    def test_top_height_scales_with_de(self):
        top = bc.geodesic_top_height(S1, [0.0], [4.0], profile=self.profile)
        self.assertAlmostEqual(top, math.log(4.0) + self.profile([1.0]), places=12)
        with self.assertRaises(IdenticalPoints):
            bc.geodesic_top_height(S1, [1.0], [1.0], profile=self.profile)

    def test_parabolic_quasimetric(self):
        params = VisualParams(BoundaryPoint.xi0(), GroupPoint([0.0], 0.0), 1.0)
        value = bc.parabolic_quasimetric(S1, params, [0.0], [4.0], profile=self.profile)
        self.assertAlmostEqual(value, 2.0, delta=2e-2)
        self.assertEqual(bc.parabolic_quasimetric(S1, params, [1.0], [1.0], profile=self.profile), 0.0)

        lower = VisualParams(BoundaryPoint([0.0]), GroupPoint([0.0], 0.0), 1.0)
        with self.assertRaises(GeometryError):
            bc.parabolic_quasimetric(S1, lower, [0.0], [4.0], profile=self.profile)

    def test_parabolic_matches_D_up_to_one_factor(self):
        points = np.array([[0.0], [0.3], [1.0], [2.5], [-4.0]])
        report = bc.compare_parabolic_vs_D(S1, GroupPoint([0.0], 0.0), points, self.profile)
        self.assertAlmostEqual(report['band'], 1.0, places=9)
        self.assertAlmostEqual(report['min'], math.exp(self.profile([1.0])), places=9)

    def test_base_height_change_is_one_factor(self):
        points = np.array([[0.0], [0.3], [1.0], [2.5], [-4.0]])
        report = bc.parameter_band_check(S1, GroupPoint([0.0], 0.0), GroupPoint([0.0], 1.0), 1.0, points, self.profile)
        self.assertAlmostEqual(report['min'], math.exp(-1.0), places=9)
        self.assertAlmostEqual(report['band'], 1.0, places=9)
        self.assertAlmostEqual(report['bound'], 4.0 * math.e ** 2)

    def test_equal_parameters_give_identity_profile(self):
        points = np.array([[0.0], [0.3], [1.0], [2.5], [-4.0]])
        rng = np.random.default_rng(5)
        report = bc.parameter_eta_check(S1, GroupPoint([0.0], 0.0), 0.5, 0.5, points, self.profile, 200, rng)
        self.assertGreater(report['count'], 0)
        # Same metric on both sides: out = t against the bound 4t
        self.assertAlmostEqual(report['worst_ratio_to_bound'], 0.25, places=9)

    def test_eta_check_needs_three_points(self):
        points = np.array([[0.0], [1.0]])
        rng = np.random.default_rng(5)
        with self.assertRaises(TooFewPoints):
            bc.parameter_eta_check(S1, GroupPoint([0.0], 0.0), 0.5, 0.25, points, self.profile, 50, rng)

    def test_inversion_comparison_rejects_large_epsilon(self):
        points = np.array([[0.0], [1.0], [3.0]])
        too_large = 2.0 * min(bc.epsilon0(S1), bc.epsilon1(S1))
        with self.assertRaises(GeometryError):
            bc.compare_parabolic_vs_inversion(S1, GroupPoint([0.0], 0.0), too_large, points, self.profile)

    def test_inversion_comparison_band(self):
        points = np.array([[0.0], [1.0], [3.0], [-2.0]])
        epsilon = min(bc.epsilon0(S1), bc.epsilon1(S1))
        report = bc.compare_parabolic_vs_inversion(S1, GroupPoint([0.0], 0.0), epsilon, points, self.profile)
        self.assertGreater(report['count'], 0)
        self.assertGreaterEqual(report['band'], 1.0)
        self.assertTrue(math.isfinite(report['band']))

    def test_profile_rejects_four_blocks(self):
        spec = build_spectrum([(1, 1.0), (1, 2.0), (1, 3.0), (1, 4.0)])
        with self.assertRaises(TooManyBlocks):
            bc.TopHeightProfile(spec)

    def test_csv_export(self):
        points = np.array([[0.0], [1.0], [3.0]])
        space, _ = bc.parabolic_chain_metric(S1, points, GroupPoint([0.0], 0.0), 0.5, self.profile)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'parabolic.csv'
            bc.sampled_space_to_csv(space, path)
            loaded = bc.sampled_space_from_csv(path)
        self.assertEqual(loaded.labels, space.labels)
        np.testing.assert_allclose(loaded.dist, space.dist)
