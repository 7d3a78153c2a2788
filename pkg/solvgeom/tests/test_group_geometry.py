import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from solvgeom.exceptions import GeometryError, IdenticalPoints, InvalidVelocity, MultiBlockSpectrum
from solvgeom.models import GroupPoint
from solvgeom.services import group_geometry as gg
from solvgeom.services.geodesic_solver import COARSE, solve_distance, solve_in_place
from solvgeom.services.spectrum_metrics import build_spectrum, de_height

S1 = build_spectrum([(1, 1.0)])
S2 = build_spectrum([(1, 1.0), (1, 2.0)])

heights = st.floats(min_value=-3.0, max_value=3.0)
shifts = st.floats(min_value=-2.0, max_value=2.0)


class GroupLawTests(SimpleTestCase):

    def test_metric_tensor(self):
        np.testing.assert_allclose(gg.metric_tensor(S2, GroupPoint([0, 0], 0.0)), np.eye(3))
        np.testing.assert_allclose(np.diag(gg.metric_tensor(S2, GroupPoint([0, 0], 1.0))),
                                   [math.exp(-2), math.exp(-4), 1.0])
        np.testing.assert_allclose(np.diag(gg.metric_tensor(S2, GroupPoint([0, 0], -1.0))),
                                   [math.exp(2), math.exp(4), 1.0])

    def test_horospherical_distance(self):
        self.assertAlmostEqual(float(gg.horospherical_distance(S2, [1, 0], [0, 0], 0.0)), 1.0)
        self.assertAlmostEqual(float(gg.horospherical_distance(S2, [1, 1], [0, 0], 0.0)), math.sqrt(2.0))
        t0 = float(de_height(S2, [0, 0], [1, 1]))
        self.assertAlmostEqual(t0, 0.2406059125, places=8)
        self.assertAlmostEqual(float(gg.horospherical_distance(S2, [1, 1], [0, 0], t0)), 1.0, places=10)

    def test_left_translate(self):
        p = GroupPoint([1.5, -2.0], 0.3)
        same = gg.left_translate(S2, GroupPoint([0, 0], 0.0), p)
        np.testing.assert_allclose(same.as_array(), p.as_array())

        s = 0.7
        moved = gg.left_translate(S2, gg.vertical_shift(S2, s), GroupPoint([1.0, 1.0], 0.0))
        np.testing.assert_allclose(moved.x, [math.exp(s), math.exp(2 * s)])
        self.assertEqual(moved.t, s)

    @given(shifts, heights, shifts, heights, shifts, heights)
    @settings(max_examples=100, deadline=None)
    def test_associativity(self, a, t1, b, t2, c, t3):
        g, h, p = GroupPoint([a, b], t1), GroupPoint([b, c], t2), GroupPoint([c, a], t3)
        left = gg.left_translate(S2, gg.left_translate(S2, g, h), p)
        right = gg.left_translate(S2, g, gg.left_translate(S2, h, p))
        np.testing.assert_allclose(left.as_array(), right.as_array(), rtol=1e-12, atol=1e-12)

    @given(shifts, heights)
    @settings(max_examples=100, deadline=None)
    def test_inverse(self, a, t):
        g = GroupPoint([a, -a], t)
        product = gg.left_translate(S2, g, gg.inverse(S2, g))
        np.testing.assert_allclose(product.as_array(), [0.0, 0.0, 0.0], atol=1e-12)


class GeodesicTests(SimpleTestCase):

    def test_vertical_launch_stays_vertical(self):
        path = gg.integrate_geodesic(S2, GroupPoint([0.5, -1.0], 0.0), [0.0, 0.0, 1.0], 2.0, samples=11)
        np.testing.assert_allclose(path.samples[:, :2], [[0.5, -1.0]] * 11, atol=1e-12)
        self.assertAlmostEqual(path.end.t, 2.0, places=9)
        self.assertLessEqual(path.speed_drift, 1e-8)

        down = gg.integrate_geodesic(S2, GroupPoint([0, 0], 0.0), [0.0, 0.0, -1.0], 1.5, samples=5)
        self.assertAlmostEqual(down.end.t, -1.5, places=9)

    def test_horizontal_launch_follows_half_plane_semicircle(self):
        path = gg.integrate_geodesic(S1, GroupPoint([0.0], 0.0), [1.0, 0.0], 1.0)
        self.assertAlmostEqual(float(path.end.x[0]), math.tanh(1.0), delta=1e-6)
        self.assertAlmostEqual(path.end.t, -math.log(math.cosh(1.0)), delta=1e-6)

    def test_rejects_non_unit_velocity(self):
        with self.assertRaises(InvalidVelocity):
            gg.integrate_geodesic(S2, GroupPoint([0, 0], 0.0), [1.0, 1.0, 1.0], 1.0)


class DistanceTests(SimpleTestCase):

    def test_vertical_pair(self):
        d = gg.distance(S1, GroupPoint([0.0], 0.0), GroupPoint([0.0], math.log(2.0)))
        self.assertAlmostEqual(d, math.log(2.0), delta=1e-6)

    def test_horizontal_pair_matches_closed_form(self):
        p, q = GroupPoint([0.0], 0.0), GroupPoint([1.0], 0.0)
        exact = math.acosh(1.5)
        self.assertAlmostEqual(gg.hyperbolic_oracle_distance(1.0, 1, p, q), exact, places=12)
        self.assertLessEqual(abs(gg.distance(S1, p, q) - exact) / exact, 1e-4)

    def test_oracle_for_other_eigenvalues(self):
        rng = np.random.default_rng(5)
        for alpha in (0.5, 2.0):
            spec = build_spectrum([(1, alpha)])
            for _ in range(3):
                p = GroupPoint(rng.uniform(-1, 1, 1), rng.uniform(-1, 1))
                q = GroupPoint(rng.uniform(-1, 1, 1), rng.uniform(-1, 1))
                exact = gg.oracle_distance(spec, p, q)
                self.assertLessEqual(abs(gg.distance(spec, p, q) - exact) / exact, 1e-4)

    def test_oracle_needs_single_block(self):
        with self.assertRaises(MultiBlockSpectrum):
            gg.oracle_distance(S2, GroupPoint([0, 0], 0.0), GroupPoint([1, 0], 0.0))

    def test_same_point(self):
        p = GroupPoint([0.3, 0.4], 0.5)
        self.assertAlmostEqual(gg.distance(S2, p, GroupPoint(p.x, p.t)), 0.0, places=9)

    def test_lower_bound_symmetry_and_left_invariance(self):
        rng = np.random.default_rng(17)
        for _ in range(4):
            p = GroupPoint(rng.uniform(-1, 1, 2), rng.uniform(-1, 1))
            q = GroupPoint(rng.uniform(-1, 1, 2), rng.uniform(-1, 1))
            g = GroupPoint(rng.uniform(-1, 1, 2), rng.uniform(-1, 1))
            d = gg.distance(S2, p, q)
            self.assertGreaterEqual(d, abs(p.t - q.t) - 1e-6)
            self.assertLessEqual(abs(gg.distance(S2, q, p) - d), 1e-3)
            moved, ladder = solve_in_place(S2, gg.left_translate(S2, g, p), gg.left_translate(S2, g, q))
            self.assertTrue(ladder)
            self.assertLessEqual(abs(moved - solve_distance(S2, p, q).polyline_length), 1e-3)

    def test_in_place_solve_on_the_half_plane(self):
        # Far from the origin in raw coordinates, against the closed form
        g = GroupPoint([40.0], 3.0)
        p = gg.left_translate(S1, g, GroupPoint([0.0], 0.0))
        q = gg.left_translate(S1, g, GroupPoint([1.5], 0.5))
        moved, _ = solve_in_place(S1, p, q)
        exact = gg.oracle_distance(S1, GroupPoint([0.0], 0.0), GroupPoint([1.5], 0.5))
        self.assertLessEqual(abs(moved - exact) / exact, 1e-3)
        self.assertEqual(solve_in_place(S1, p, GroupPoint(p.x, p.t + 2.0)), (2.0, []))


class BusemannTests(SimpleTestCase):

    def test_xi0_closed_form(self):
        base = GroupPoint([0, 0], 0.0)
        self.assertEqual(gg.busemann_xi0(S2, base, GroupPoint([5, 0], 3.0)), -3.0)
        self.assertEqual(gg.busemann_xi0(S2, base, base), 0.0)

    def test_xi0_numeric(self):
        base, p = GroupPoint([0, 0], 0.0), GroupPoint([0.5, -0.5], 1.0)
        numeric = gg.busemann_xi0_numeric(S2, base, p)
        self.assertLessEqual(abs(numeric - gg.busemann_xi0(S2, base, p)), 1e-2)

    def test_boundary_point_against_half_plane(self):
        base, p, xi = GroupPoint([0.0], 0.0), GroupPoint([0.4], 0.5), np.array([0.1])
        result = gg.busemann_numeric(S1, xi, base, p)
        exact = gg.hyperbolic_oracle_busemann(1.0, xi, base, p)
        self.assertLessEqual(abs(result['value'] - exact), 1e-2)

    def test_extrapolation_beats_the_raw_value(self):
        base, p, xi = GroupPoint([0.0], 0.0), GroupPoint([1.0], 0.0), np.array([0.0])
        exact = gg.hyperbolic_oracle_busemann(1.0, xi, base, p)
        self.assertAlmostEqual(exact, math.log(2.0), places=12)

        def along_ray(s):
            return gg.hyperbolic_oracle_distance(1.0, 1, gg.downward_ray(xi, base, s), p) - s

        T = 4.0
        raw, half = along_ray(T), along_ray(T / 2.0)
        extrapolated = gg.extrapolate_busemann(raw, half, T, 2.0)
        # Raw error is about e^(-2T) / 4
        self.assertGreater(abs(raw - exact), 1e-5)
        self.assertLess(abs(extrapolated - exact), abs(raw - exact) / 100.0)

    def test_numeric_reports_raw_and_extrapolated(self):
        base, p, xi = GroupPoint([0.0], 0.0), GroupPoint([0.4], 0.5), np.array([0.1])
        result = gg.busemann_numeric(S1, xi, base, p, T=10.0)
        expected = gg.extrapolate_busemann(result['raw'], result['half'], 10.0, 2.0)
        self.assertAlmostEqual(result['value'], expected, places=12)
        self.assertAlmostEqual(result['accuracy'], abs(result['raw'] - result['half']), places=12)
        with self.assertRaises(GeometryError):
            gg.busemann_numeric(S1, xi, base, p, T=5.0)

    def test_point_on_ray(self):
        base, xi = GroupPoint([0.0], 0.0), np.array([0.0])
        on_ray = gg.downward_ray(xi, base, 2.0)
        self.assertAlmostEqual(gg.hyperbolic_oracle_busemann(1.0, xi, base, on_ray), -2.0, places=12)
        self.assertLessEqual(abs(gg.busemann_numeric(S1, xi, base, on_ray)['value'] + 2.0), 1e-2)


class DistanceEstimateTests(SimpleTestCase):

    def test_quasicenter_of_unit_pair(self):
        result = gg.quasicenter(S1, [0.0], [1.0])
        np.testing.assert_allclose(result['center'].x, [0.0])
        self.assertAlmostEqual(result['center'].t, 0.0, places=9)
        self.assertLessEqual(result['defect'], 5.0)
        self.assertEqual(result['sides']['gamma_p'], 0.0)

    def test_quasicenter_symmetric_height(self):
        forward = gg.quasicenter(S2, [0.0, 0.0], [1.0, 1.0], mode=COARSE)
        backward = gg.quasicenter(S2, [1.0, 1.0], [0.0, 0.0], mode=COARSE)
        self.assertAlmostEqual(forward['t0'], backward['t0'], places=12)

    def test_quasicenter_rejects_identical_points(self):
        with self.assertRaises(IdenticalPoints):
            gg.quasicenter(S2, [1.0, 1.0], [1.0, 1.0])

    def test_g3_regime_two_at_quasicenter_height(self):
        t0 = float(de_height(S2, [0, 0], [1, 1]))
        result = gg.g3_defect(S2, [0, 0], [1, 1], t0, t0)
        self.assertEqual(result['regime'], 2)
        self.assertGreaterEqual(result['lower_slack'], -1e-3)
        self.assertGreaterEqual(result['upper_slack'], -1e-3)

    def test_g3_regime_one_for_half_plane(self):
        result = gg.g3_defect(S1, [0.0], [1.0], -3.0, -3.0)
        self.assertEqual(result['regime'], 1)
        self.assertLessEqual(abs(result['defect']), math.log(3.0))

    def test_contraction_envelope(self):
        vertices = [[0.0, 0.0], [1.0, 0.5], [2.0, -1.0]]
        for s in (-1.0, 0.5, 2.0):
            result = gg.contraction_ratio(S2, vertices, 0.0, s)
            low, high = sorted((result['lower'], result['upper']))
            self.assertLessEqual(low - 1e-12, result['ratio'])
            self.assertLessEqual(result['ratio'], high + 1e-12)

    def test_pinching(self):
        result = gg.pinching_check(S2, [0.0, 0.0], [1.0, 0.5], 0.0)
        self.assertGreaterEqual(result['lower_slack'], -1e-3)
        self.assertGreaterEqual(result['upper_slack'], -1e-3)

    def test_delta_hat_reference(self):
        self.assertAlmostEqual(gg.delta_hat(S1), math.log(1.0 + math.sqrt(2.0)))
        self.assertAlmostEqual(gg.delta_hat(build_spectrum([(1, 2.0)])), math.log(1.0 + math.sqrt(2.0)) / 2.0)
