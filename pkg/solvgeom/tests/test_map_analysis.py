import math

import numpy as np
from django.test import SimpleTestCase

from solvgeom.exceptions import (
    FoliationBroken,
    GeometryError,
    InconsistentPair,
    NotQuasisymmetric,
    SingleBlockSpectrum,
    SparseNeighborhood,
    TooFewPoints,
)
from solvgeom.models import GroupPoint, SampledMap
from solvgeom.services import map_analysis as ma
from solvgeom.services.spectrum_metrics import build_spectrum
from solvgeom.utils import map_catalog, sampling

S1 = build_spectrum([(1, 1.0)])
S2 = build_spectrum([(1, 1.0), (1, 2.0)])


def grid_map(catalog_map, per_axis=7, scale=1.0, spec=S2):
    return ma.sample_map_at_scale(spec, catalog_map, scale, per_axis=per_axis)


class QuasisymmetryTests(SimpleTestCase):

    def test_identity_profile(self):
        profile = ma.qs_profile(S2, grid_map(map_catalog.identity(S2)))
        self.assertLessEqual(profile.eta(1.0), 1.0 + 1e-12)
        t, out = profile.witness
        self.assertAlmostEqual(out / t, 1.0, places=12)
        self.assertAlmostEqual(profile.k_plus, 1.0, places=12)
        self.assertEqual(profile.notes['metric'], 'D')

    def test_similarity_fit(self):
        fit = ma.quasisimilarity_fit(S2, grid_map(map_catalog.similarity(S2, 2.0)))
        self.assertAlmostEqual(fit['C'], 2.0, places=9)
        self.assertAlmostEqual(fit['K'], 1.0, places=9)

    def test_shear_is_bilipschitz(self):
        L = 1.0
        sampled = grid_map(map_catalog.shear(S2, L))
        fit = ma.quasisimilarity_fit(S2, sampled)
        self.assertLessEqual(fit['K'], (1.0 + L) ** 2 + 1e-9)
        t, out = ma.qs_profile(S2, sampled).witness
        self.assertLessEqual(out / t, (1.0 + L) ** 2 + 1e-9)

    def test_inverse_fit(self):
        sampled = grid_map(map_catalog.shear(S2, 0.5))
        forward = ma.quasisimilarity_fit(S2, sampled)
        backward = ma.quasisimilarity_fit(S2, sampled.inverse())
        self.assertAlmostEqual(backward['C'], 1.0 / forward['C'], places=9)
        self.assertAlmostEqual(backward['K'], forward['K'], places=9)

    def test_invert_profile_is_lossy(self):
        profile = ma.qs_profile(S2, grid_map(map_catalog.identity(S2), per_axis=5))
        inverted = ma.invert_profile(profile)
        self.assertTrue(inverted['lossy'])
        self.assertEqual(len(inverted['eta2']), len(profile.edges) - 1)

    def test_needs_three_points(self):
        sampled = SampledMap(domain=[[0.0, 0.0], [1.0, 0.0]], image=[[0.0, 0.0], [1.0, 0.0]])
        with self.assertRaises(TooFewPoints):
            ma.qs_profile(S2, sampled)

    def test_unknown_metric(self):
        with self.assertRaises(GeometryError):
            ma.distance_table(S2, [[0.0, 0.0]], metric='taxicab')

    def test_euclidean_and_leaf_tables(self):
        points = np.array([[0.0, 0.0], [3.0, 4.0]])
        self.assertAlmostEqual(ma.distance_table(S2, points, 'euclidean')[0, 1], 5.0)
        self.assertAlmostEqual(ma.distance_table(S2, points, 'DY')[0, 1], 2.0)


class PointwiseDistortionTests(SimpleTestCase):

    def test_similarity_scales_uniformly(self):
        sampled = grid_map(map_catalog.similarity(S2, 2.0), per_axis=9)
        radii = [0.25, 0.5, 1.0]
        result = ma.pointwise_distortion(S2, sampled, [0.0, 0.0], radii)
        for r, upper, lower in zip(radii, result['L_r'], result['l_r']):
            self.assertLessEqual(upper, 2.0 * r + 1e-12)
            self.assertGreaterEqual(lower, 2.0 * r - 1e-12)

    def test_sparse_neighborhood(self):
        sampled = grid_map(map_catalog.identity(S2), per_axis=9)
        with self.assertRaises(SparseNeighborhood):
            ma.pointwise_distortion(S2, sampled, [0.0, 0.0], [1e-3])

    def test_center_must_be_sampled(self):
        sampled = grid_map(map_catalog.identity(S2), per_axis=9)
        with self.assertRaises(GeometryError):
            ma.pointwise_distortion(S2, sampled, [0.123, 0.0], [0.5])


class FoliationTests(SimpleTestCase):

    def setUp(self):
        self.points = sampling.leaf_points(S2, 6, 5, sampling.make_rng(11))

    def test_block_affine_preserves_leaves(self):
        sampled = ma.sample_map(S2, map_catalog.block_affine(S2, [2.0, -1.0]), self.points)
        check = ma.foliation_check(S2, sampled)
        self.assertEqual(check['verdict'], ma.PRESERVES)
        self.assertEqual(check['leaves'], 6)

        parts = ma.factorize(S2, sampled)
        self.assertEqual(parts['G'].size, 6)
        self.assertEqual(len(parts['H']), 6)
        for y, h in parts['H']:
            np.testing.assert_allclose(h.image, 2.0 * h.domain)

    def test_rotation_breaks_leaves(self):
        sampled = ma.sample_map(S2, map_catalog.rotation(S2, math.pi / 4), self.points)
        check = ma.foliation_check(S2, sampled)
        self.assertEqual(check['verdict'], ma.BREAKS)
        self.assertGreater(check['broken_leaves'], 0)
        with self.assertRaises(FoliationBroken):
            ma.factorize(S2, sampled)

    def test_single_block_has_no_foliation(self):
        sampled = grid_map(map_catalog.identity(S1), per_axis=5, spec=S1)
        with self.assertRaises(SingleBlockSpectrum):
            ma.foliation_check(S1, sampled)

    def test_l1_inequality_for_identity(self):
        sampled = ma.sample_map(S2, map_catalog.identity(S2), self.points)
        result = ma.l1_inequality_check(S2, sampled, 1.0, [0.1, 0.3, 0.6])
        self.assertEqual(result['violations'], 0)
        self.assertLessEqual(result['max_ratio'], 1.0 + 1e-12)


class MainBoundTests(SimpleTestCase):

    def test_inverse_at_one(self):
        self.assertAlmostEqual(ma._inverse_at_one(lambda t: 4.0 * t), 0.25, places=12)
        self.assertEqual(ma._inverse_at_one(lambda t: t), 1.0)

    def test_similarity_is_consistent(self):
        catalog_map = map_catalog.similarity(S2, 3.0)
        maps = [grid_map(catalog_map, scale=s) for s in (0.1, 1.0, 10.0)]
        result = ma.main_bound_check(S2, maps, analytic_eta=catalog_map.analytic_eta)
        self.assertEqual(result['source'], 'analytic')
        self.assertAlmostEqual(result['bound'], 1.0)
        self.assertTrue(result['consistent'])

    def test_empirical_bound_is_reported_only(self):
        maps = [grid_map(map_catalog.shear(S2, 1.0), scale=s) for s in (0.5, 2.0)]
        result = ma.main_bound_check(S2, maps)
        self.assertEqual(result['source'], 'empirical')
        self.assertIsNone(result['consistent'])

    def test_block_mixing_rotation_diverges(self):
        catalog_map = map_catalog.rotation(S2, math.pi / 4)
        maps = [grid_map(catalog_map, scale=s) for s in (1e-4, 1.0)]
        with self.assertRaises(NotQuasisymmetric):
            ma.main_bound_check(S2, maps)


class GroupMapTests(SimpleTestCase):

    def setUp(self):
        self.points = sampling.group_points(S2, 12, sampling.make_rng(4))

    def _pair(self, catalog_group_map):
        sampled = ma.sample_group_map(S2, catalog_group_map, self.points)
        boundary = ma.sample_map(S2, catalog_group_map.trace, sampled.domain[:, :-1])
        return sampled, boundary

    def test_left_translation_is_height_respecting(self):
        sampled, boundary = self._pair(map_catalog.left_translation(S2, GroupPoint([0.5, -1.0], 0.7)))
        result = ma.height_respecting_check(S2, sampled, boundary)
        self.assertAlmostEqual(result['height_spread'], 0.0, places=12)
        self.assertAlmostEqual(result['height_defect'], 0.7, places=12)
        self.assertAlmostEqual(result['boundary_K'], 1.0, places=9)
        self.assertTrue(result['agree'])
        self.assertEqual(result['matched'], 12)

    def test_mismatched_trace(self):
        sampled, _ = self._pair(map_catalog.left_translation(S2, GroupPoint([0.5, -1.0], 0.7)))
        wrong = ma.sample_map(S2, map_catalog.identity(S2), sampled.domain[:, :-1])
        with self.assertRaises(InconsistentPair):
            ma.height_respecting_check(S2, sampled, wrong)

    def test_left_translation_is_an_isometry(self):
        sampled, _ = self._pair(map_catalog.left_translation(S2, GroupPoint([0.2, 0.3], -0.4)))
        result = ma.almost_isometry_defect(S2, sampled, [(0, 1), (2, 3)])
        self.assertLessEqual(result['sup'], 1e-6)
        self.assertEqual(result['count'], 2)
