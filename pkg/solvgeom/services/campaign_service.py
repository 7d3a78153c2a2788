# solvgeom/services/campaign_service.py

# =============================================================================
# IMPORTS SECTION
# =============================================================================

import logging
import math

import numpy as np
from django.conf import settings

from ..exceptions import GeometryError, NotQuasisymmetric
from ..models import BoundaryPoint, CampaignReport, CheckStat, GroupPoint, SampledSpace
from ..models.reports import INFO, shard_label
from ..models.sampled_space import METRIC
from ..serializers.campaign_config import SUBCOMMANDS
from ..utils import map_catalog, sampling
from . import boundary_constructions as bc
from . import geodesic_solver, group_geometry, map_analysis, modulus, spectrum_metrics
from .geodesic_solver import COARSE
from .report_service import config_hash, spectra_digest

logger = logging.getLogger('solvgeom')

# Relative oracle error accepted when the config sets no distance tolerance
ORACLE_TOL = 1e-4
QUASICENTER_BOUND = 5.0


# =============================================================================
# MAIN SERVICE CLASS - CampaignService
# =============================================================================

class CampaignService:
    """
    Runs verification campaigns over the configured spectra and folds every
    measured quantity into CheckStats of one CampaignReport.

    Key Responsibilities:
    1. Draw the full seeded sample of each campaign and keep this shard's part
    2. Evaluate the geometry services on it
    3. Record asserted bounds and informational values per spectrum
    4. Turn per-sample GeometryErrors into failing checks instead of aborting
    """

    def __init__(self, config, shard=0, jobs=1):
        """
        Args:
            config: validated data of CampaignConfigSerializer
            shard, jobs: this run computes indices i with i % jobs == shard
        """
        self.config = config
        self.seed = int(config['seed'])
        self.shard = int(shard)
        self.jobs = int(jobs)
        self.counts = config['counts']
        self.max_witnesses = settings.SOLVGEOM['MAX_WITNESSES']

        # Subcommand name -> handler(spec, report, rng)
        self.campaign_handlers = {
            'verify-norms': self._verify_norms,
            'distance': self._distance,
            'geodesic': self._geodesic,
            'busemann': self._busemann,
            'quasicenter': self._quasicenter,
            'g3': self._g3,
            'visual': self._visual,
            'parabolic': self._parabolic,
            'invert': self._invert,
            'sphericalize': self._sphericalize,
            'relation1': self._relation1,
            'qs-profile': self._qs_profile,
            'foliation': self._foliation,
            'factorize': self._factorize,
            'main-bound': self._main_bound,
            'height-respect': self._height_respect,
            'modulus': self._modulus,
        }

    # =========================================================================
    # ORCHESTRATION
    # =========================================================================

    def run(self, subcommand):
        """Run one subcommand (or ``all``) for this shard and return its report."""
        if subcommand == 'all':
            names = list(self.campaign_handlers)
        elif subcommand in self.campaign_handlers:
            names = [subcommand]
        else:
            raise GeometryError(f'unknown subcommand {subcommand!r}')

        report = CampaignReport(
            subcommand=subcommand,
            config_hash=config_hash(self.config),
            seed=self.seed,
            shards=frozenset({shard_label(self.shard, self.jobs, self.seed,
                                          spectra_digest(self.config['spectra']))}),
        )
        for spec_index, spec in enumerate(self.config['spectra']):
            for name in names:
                logger.info(f'=== CAMPAIGN {name} [{spec.label}] shard {self.shard}/{self.jobs} ===')
                rng = sampling.make_rng(self.seed, 1000 * spec_index + SUBCOMMANDS.index(name))
                try:
                    self.campaign_handlers[name](spec, report, rng)
                except GeometryError as exc:
                    logger.error(f'{name} [{spec.label}] aborted: {exc.detail}')
                    self._record(report, spec, f'{name}.aborted', [1.0], bound=0.0, kind='max',
                                 witnesses=[exc.as_dict()])
        logger.info(f'=== CAMPAIGN {subcommand} DONE: {"PASS" if report.passed else "FAIL"} ===')
        return report

    # =========================================================================
    # HELPERS
    # =========================================================================

    def _mine(self, count):
        return sampling.shard_indices(count, self.shard, self.jobs)

    @property
    def _owner(self):
        """Checks that are not sample loops run on shard 0 only."""
        return self.shard == 0

    def _record(self, report, spec, name, values, bound=None, kind=INFO, witnesses=(), violations=None):
        """Fold ``values`` into the check ``<spectrum>:<name>``; non-finite values fail asserted checks."""
        values = np.ravel(np.asarray(values, dtype=float))
        finite = values[np.isfinite(values)]
        stat = CheckStat(name=f'{spec.label}:{name}', bound=bound, bound_kind=kind)
        stat.observe(finite, violations=violations, witnesses=witnesses, limit=self.max_witnesses)
        if kind != INFO:
            stat.failures += int(values.size - finite.size)
        stat.count += int(values.size - finite.size)
        report.add(stat)
        return stat

    def _attempt(self, report, spec, name, func, *args, **kwargs):
        """Call ``func``; a GeometryError becomes one failure of ``<name>.errors``."""
        try:
            return func(*args, **kwargs)
        except GeometryError as exc:
            self._record(report, spec, f'{name}.errors', [1.0], bound=0.0, kind='max',
                         witnesses=[exc.as_dict()])
            return None

    def _witnesses(self, values, labels, bound, kind='max'):
        values = np.asarray(values, dtype=float)
        bad = np.nonzero(values > bound if kind == 'max' else values < bound)[0]
        return [{'sample': labels[i], 'value': float(values[i])} for i in bad]

    def _epsilon(self, spec):
        configured = self.config['epsilon'].get('epsilon')
        eps0 = self.config['epsilon'].get('epsilon0') or bc.epsilon0(spec)
        return float(configured) if configured is not None else eps0

    def _tol(self, key, default):
        value = self.config['tolerances'].get(key)
        return default if value is None else value

    # =========================================================================
    # BOUNDARY METRICS
    # =========================================================================

    def _verify_norms(self, spec, report, rng):
        count = self.counts['pairs']
        n = spec.n
        exponents = spec.coord_alphas / spec.alpha1
        scales = np.exp(rng.uniform(-3.0, 3.0, size=count))
        xs = rng.uniform(-1.0, 1.0, size=(count, n)) * scales[:, None] ** exponents
        ys = xs + rng.uniform(-1.0, 1.0, size=(count, n)) * scales[:, None] ** exponents
        zs = xs + rng.uniform(-1.0, 1.0, size=(count, n)) * scales[:, None] ** exponents
        lams = np.exp(rng.uniform(-2.0, 2.0, size=count))

        idx = self._mine(count)
        xs, ys, zs, lams = xs[idx], ys[idx], zs[idx], lams[idx]
        labels = [int(i) for i in idx]
        if len(idx):
            sandwich = spectrum_metrics.check_norm_sandwich(spec, xs, ys, tol=self._tol('root', None))
            self._record(report, spec, 'norms.lower_violation', sandwich['lower_values'], bound=1e-9,
                         kind='max', witnesses=self._witnesses(sandwich['lower_values'], labels, 1e-9))
            self._record(report, spec, 'norms.upper_violation', sandwich['upper_values'], bound=1e-9,
                         kind='max', witnesses=self._witnesses(sandwich['upper_values'], labels, 1e-9))

            triangle = spectrum_metrics.check_triangle(spec, xs, ys, zs)
            self._record(report, spec, 'D.triangle_excess', triangle, bound=1e-9, kind='max',
                         witnesses=self._witnesses(triangle, labels, 1e-9))

            quasi = spectrum_metrics.quasi_triangle_constant(spec, xs, ys, zs)
            self._record(report, spec, 'Ds.quasi_triangle_ratio', quasi['ratios'],
                         bound=quasi['theoretical'] + 1e-9, kind='max')

            d = spectrum_metrics.dist_D(spec, xs, ys)
            scaled = spectrum_metrics.dist_D(spec, spectrum_metrics.block_dilation(spec, xs, lams[:, None]),
                                             spectrum_metrics.block_dilation(spec, ys, lams[:, None]))
            homogeneity = np.abs(scaled - lams * d) / (lams * d)
            self._record(report, spec, 'D.homogeneity_error', homogeneity, bound=1e-9, kind='max')

        if not self._owner:
            return
        radii = np.logspace(-1.0, 1.0, 9)
        ratios = spectrum_metrics.ball_measure(spec, radii) / (spectrum_metrics.ball_measure(spec, 1.0) * radii ** spec.Q)
        self._record(report, spec, 'measure.Q_regularity_error', np.abs(ratios - 1.0), bound=1e-12, kind='max')

        if spec.r >= 2:
            segment = np.zeros((2, n))
            segment[1, spec.starts[1]] = 1.0
            expected_power = 1.0 - spec.alphas[0] / spec.alphas[1]
            errors = [abs(spectrum_metrics.d_length(spec, segment, refinement=N) / N ** expected_power - 1.0)
                      for N in (4, 16, 64)]
            self._record(report, spec, 'd_length.snowflake_law_error', errors, bound=1e-9, kind='max')

            leaf_errors = []
            for _ in range(5):
                p = rng.uniform(-1.0, 1.0, size=n)
                y2 = rng.uniform(-1.0, 1.0, size=n - spec.dims[0])
                hausdorff = float(spectrum_metrics.leaf_hausdorff(spec, spectrum_metrics.leaf_part(spec, p), y2))
                direct = spectrum_metrics.point_to_leaf_distance(spec, p, y2)
                leaf_errors.append(abs(direct - hausdorff) / max(hausdorff, 1e-300))
            self._record(report, spec, 'leaf.distance_error', leaf_errors, bound=1e-6, kind='max')

    # =========================================================================
    # GROUP GEOMETRY
    # =========================================================================

    def _distance(self, spec, report, rng):
        cfg = self.config['distance']
        count = self.counts['distance_pairs']
        ps = sampling.group_points(spec, count, rng, box=cfg['box'], heights=cfg['heights'])
        qs = sampling.group_points(spec, count, rng, box=cfg['box'], heights=cfg['heights'])
        gs = sampling.group_points(spec, count, rng, box=cfg['box'], heights=cfg['heights'])

        lower, symmetric, invariant, oracle, flagged = [], [], [], [], []
        for i in self._mine(count):
            p, q, g = ps[i], qs[i], gs[i]
            result = self._attempt(report, spec, 'distance', geodesic_solver.solve_distance, spec, p, q)
            if result is None:
                continue
            d = result.value
            flagged.append(float(result.flagged))
            lower.append(abs(p.t - q.t) - d)
            reverse = self._attempt(report, spec, 'distance', group_geometry.distance, spec, q, p)
            if reverse is not None:
                symmetric.append(abs(reverse - d))
            # The translated pair is minimized in its own coordinates, against the energy length at p
            moved = self._attempt(report, spec, 'distance', geodesic_solver.solve_in_place, spec,
                                  group_geometry.left_translate(spec, g, p),
                                  group_geometry.left_translate(spec, g, q))
            if moved is not None:
                invariant.append(abs(moved[0] - result.polyline_length))
            if spec.r == 1:
                exact = group_geometry.oracle_distance(spec, p, q)
                oracle.append(abs(d - exact) / exact)

        self._record(report, spec, 'distance.height_lower_bound', lower, bound=1e-6, kind='max')
        self._record(report, spec, 'distance.symmetry', symmetric, bound=1e-3, kind='max')
        self._record(report, spec, 'distance.left_invariance', invariant, bound=1e-3, kind='max')
        self._record(report, spec, 'distance.flagged', flagged)
        if oracle:
            self._record(report, spec, 'distance.oracle_relative_error', oracle,
                         bound=self._tol('distance', ORACLE_TOL), kind='max')
        if cfg['oracle']:
            self._distance_oracle(spec, report, rng, count)

    def _distance_oracle(self, spec, report, rng, count):
        """Single-block spectra against the closed-form half-space distance, pairs with d <= 10."""
        cfg = self.config['distance']
        for alpha in cfg['oracle_alphas']:
            single = spectrum_metrics.build_spectrum([(cfg['oracle_dimension'], alpha)])
            ps = sampling.group_points(single, count, rng, box=cfg['box'], heights=cfg['heights'])
            qs = sampling.group_points(single, count, rng, box=cfg['box'], heights=cfg['heights'])
            errors, skipped = [], 0
            for i in self._mine(count):
                exact = group_geometry.oracle_distance(single, ps[i], qs[i])
                if exact > 10.0:
                    skipped += 1
                    continue
                d = self._attempt(report, single, 'oracle', group_geometry.distance, single, ps[i], qs[i])
                if d is not None:
                    errors.append(abs(d - exact) / exact)
            self._record(report, single, 'oracle.relative_error', errors,
                         bound=self._tol('distance', ORACLE_TOL), kind='max')
            self._record(report, single, 'oracle.skipped_pairs', [skipped])

    def _geodesic(self, spec, report, rng):
        count = self.counts['geodesics']
        starts = sampling.group_points(spec, count, rng)
        directions = rng.normal(size=(count, spec.n + 1))
        lengths = rng.uniform(0.5, 3.0, size=count)
        horo_x = rng.uniform(-1.0, 1.0, size=(count, 2, spec.n))
        horo_t = rng.uniform(-1.0, 1.0, size=count)
        shifts = rng.uniform(-2.0, 2.0, size=count)

        drift, minimality, pinch_low, pinch_high, contraction = [], [], [], [], []
        for i in self._mine(count):
            p = starts[i]
            metric = np.diag(group_geometry.metric_tensor(spec, p))
            v = directions[i] / math.sqrt(float(np.sum(metric * directions[i] ** 2)))
            path = self._attempt(report, spec, 'geodesic', group_geometry.integrate_geodesic,
                                 spec, p, v, lengths[i], samples=51)
            if path is None:
                continue
            drift.append(path.speed_drift)
            d = self._attempt(report, spec, 'geodesic', group_geometry.distance, spec, p, path.end)
            if d is not None:
                minimality.append(abs(d - lengths[i]) / lengths[i])

            pinch = self._attempt(report, spec, 'geodesic', group_geometry.pinching_check,
                                  spec, horo_x[i, 0], horo_x[i, 1], horo_t[i])
            if pinch is not None:
                pinch_low.append(pinch['lower_slack'])
                pinch_high.append(pinch['upper_slack'])
            ratio = group_geometry.contraction_ratio(spec, horo_x[i], horo_t[i], shifts[i])
            contraction.append(min(ratio['ratio'] - ratio['lower'], ratio['upper'] - ratio['ratio']))

        self._record(report, spec, 'geodesic.speed_drift', drift, bound=1e-8, kind='max')
        self._record(report, spec, 'geodesic.minimality_error', minimality, bound=1e-4, kind='max')
        self._record(report, spec, 'horosphere.pinching_lower_slack', pinch_low, bound=-1e-6, kind='min')
        self._record(report, spec, 'horosphere.pinching_upper_slack', pinch_high, bound=-1e-6, kind='min')
        self._record(report, spec, 'horosphere.contraction_slack', contraction, bound=-1e-12, kind='min')

    def _busemann(self, spec, report, rng):
        count = self.counts['busemann_points']
        bases = sampling.group_points(spec, count, rng)
        points = sampling.group_points(spec, count, rng, box=2.0, heights=(-2.0, 2.0))
        xis = rng.uniform(-1.0, 1.0, size=(count, spec.n))

        xi0_errors, oracle_errors, accuracy = [], [], []
        for i in self._mine(count):
            base, p = bases[i], points[i]
            numeric = self._attempt(report, spec, 'busemann', group_geometry.busemann_xi0_numeric, spec, base, p)
            if numeric is not None:
                xi0_errors.append(abs(numeric - group_geometry.busemann_xi0(spec, base, p)))
            if spec.r == 1 and i % 10 == 0:
                result = self._attempt(report, spec, 'busemann', group_geometry.busemann_numeric,
                                       spec, xis[i], base, p)
                if result is not None:
                    exact = group_geometry.hyperbolic_oracle_busemann(spec.alpha1, xis[i], base, p)
                    oracle_errors.append(abs(result['value'] - exact))
                    accuracy.append(result['accuracy'])

        self._record(report, spec, 'busemann.xi0_error', xi0_errors, bound=1e-2, kind='max')
        if oracle_errors:
            self._record(report, spec, 'busemann.oracle_error', oracle_errors, bound=1e-2, kind='max')
            self._record(report, spec, 'busemann.half_ray_accuracy', accuracy)

    def _quasicenter(self, spec, report, rng):
        count = self.counts['quasicenter_pairs']
        narrow_t0, narrow_u = sampling.pairs_with_de(spec, count, rng, log_range=(-5.0, 5.0))
        wide_t0, wide_u = sampling.pairs_with_de(spec, count, rng, log_range=(-8.0, 8.0))
        offsets = rng.uniform(-1.0, 1.0, size=(count, spec.n))

        narrow, wide = [], []
        for i in self._mine(count):
            for us, out in ((narrow_u, narrow), (wide_u, wide)):
                p = offsets[i]
                result = self._attempt(report, spec, 'quasicenter', group_geometry.quasicenter,
                                       spec, p, p + us[i])
                if result is not None:
                    out.append(result['defect'])
        self._record(report, spec, 'quasicenter.defect', narrow, bound=QUASICENTER_BOUND, kind='max')
        # Uniform boundedness: widening the D_e range may not push the defect 10% past the bound
        self._record(report, spec, 'quasicenter.defect_wide_range', wide,
                     bound=1.1 * QUASICENTER_BOUND, kind='max')

    def _g3(self, spec, report, rng):
        count = self.counts['g3_pairs']
        t0s, us = sampling.pairs_with_de(spec, count, rng, log_range=(-3.0, 3.0))
        above = rng.uniform(0.0, 3.0, size=(count, 2))
        below = rng.uniform(1.0, 3.0, size=(count, 2))
        pick = rng.integers(0, 2, size=count)

        low_slack, high_slack, defects = [], [], []
        for i in self._mine(count):
            p, q = np.zeros(spec.n), us[i]
            # Regime 2: at least one point above the quasicenter height
            t1 = t0s[i] + above[i, 0]
            t2 = t0s[i] - above[i, 1] if pick[i] else t0s[i] + above[i, 1]
            result = self._attempt(report, spec, 'g3', group_geometry.g3_defect, spec, p, q, t1, t2)
            if result is not None and result['regime'] == 2:
                low_slack.append(result['lower_slack'])
                high_slack.append(result['upper_slack'])
            if spec.r == 1:
                result = self._attempt(report, spec, 'g3', group_geometry.g3_defect, spec, p, q,
                                       t0s[i] - below[i, 0], t0s[i] - below[i, 1])
                if result is not None:
                    defects.append(abs(result['defect']))

        self._record(report, spec, 'g3.regime2_lower_slack', low_slack, bound=-1e-3, kind='min')
        self._record(report, spec, 'g3.regime2_upper_slack', high_slack, bound=-1e-3, kind='min')
        if spec.r == 1 and spec.alpha1 == 1.0:
            self._record(report, spec, 'g3.regime1_defect', defects, bound=1.2, kind='max')
        elif spec.r == 1:
            # The additive constant moves with alpha; only reported
            self._record(report, spec, 'g3.regime1_defect', defects)

    # =========================================================================
    # BOUNDARY CONSTRUCTIONS
    # =========================================================================

    def _boundary_sample(self, spec, rng, count, scale=1.0):
        return sampling.boundary_points(spec, count, rng, scale=scale)

    def _profile(self, spec, report):
        if spec.r > bc.TopHeightProfile.MAX_BLOCKS:
            logger.warning(f'parabolic checks skipped for {spec.label}: {spec.r} blocks exceed '
                           f'the top-height profile limit of {bc.TopHeightProfile.MAX_BLOCKS}')
            self._record(report, spec, 'parabolic.skipped_blocks', [spec.r])
            return None
        return bc.TopHeightProfile(spec)

    def _visual(self, spec, report, rng):
        size = self.counts['visual_points']
        points = self._boundary_sample(spec, rng, size)
        base = GroupPoint(np.zeros(spec.n), 0.0)
        boundary = [BoundaryPoint(x) for x in points]
        delta = group_geometry.delta_hat(spec)
        rows, cols = np.triu_indices(size, k=1)

        spreads, asymmetry = [], []
        for k in self._mine(len(rows)):
            xi, eta = boundary[rows[k]], boundary[cols[k]]
            forward = self._attempt(report, spec, 'visual', bc.gromov_product_profile, spec, xi, eta, base)
            if forward is None:
                continue
            spreads.append(forward['spread'])
            backward = self._attempt(report, spec, 'visual', bc.gromov_product, spec, eta, xi, base)
            if backward is not None:
                asymmetry.append(abs(backward - forward['value']))
        self._record(report, spec, 'gromov.height_spread', spreads, bound=2.0 * delta, kind='max')
        self._record(report, spec, 'gromov.asymmetry', asymmetry, bound=1e-6, kind='max')

        if not self._owner:
            return
        vertical = bc.gromov_product(spec, BoundaryPoint.xi0(), BoundaryPoint(base.x), base)
        self._record(report, spec, 'gromov.xi0_vertical', [abs(vertical)], bound=2.0 * delta, kind='max')

        epsilon = bc.epsilon1(spec)
        table = np.zeros((size, size))
        for i, j in zip(rows, cols):
            table[i, j] = table[j, i] = bc.visual_quasimetric(spec, base, epsilon, boundary[i], boundary[j])
        visual = SampledSpace(labels=[f'p{i}' for i in range(size)], dist=table)
        band = bc.sandwich_band(visual, bc.chain_metrize(visual))
        self._record(report, spec, 'visual.chain_band_min', [band['min']])

    def _parabolic(self, spec, report, rng):
        if not self._owner:
            return
        profile = self._profile(spec, report)
        if profile is None:
            return
        size = self.counts['points']
        points = self._boundary_sample(spec, rng, size)
        base = GroupPoint(np.zeros(spec.n), 0.0)
        epsilon = self._epsilon(spec)

        chain, tops = bc.parabolic_chain_metric(spec, points, base, epsilon, profile)
        quasi = bc.parabolic_space(spec, points, base, epsilon, tops)
        band = bc.sandwich_band(quasi, chain)
        self._record(report, spec, 'parabolic.chain_lower_ratio', [band['min']], bound=0.5, kind='min')
        self._record(report, spec, 'parabolic.chain_upper_ratio', [band['max']], bound=1.0 + 1e-12, kind='max')

        other = GroupPoint(rng.uniform(-1.0, 1.0, size=spec.n), 1.0)
        moved = bc.parameter_band_check(spec, base, other, epsilon, points, profile,
                                        c=self.config['epsilon'].get('c'))
        self._record(report, spec, 'parabolic.basepoint_band', [moved['band']], bound=moved['bound'], kind='max')

        eta = bc.parameter_eta_check(spec, base, epsilon, epsilon / 2.0, points, profile,
                                     self.counts['triples'], rng)
        self._record(report, spec, 'parabolic.parameter_eta_ratio', [eta['worst_ratio_to_bound']],
                     bound=1.0, kind='max')

        near = bc.compare_parabolic_vs_D(spec, base, points, profile)
        far = bc.compare_parabolic_vs_D(spec, base, spectrum_metrics.block_dilation(spec, points, 2.0), profile)
        self._record(report, spec, 'parabolic.vs_D_band', [near['band'], far['band']])
        self._record(report, spec, 'parabolic.vs_D_band_growth', [far['band'] / near['band'] - 1.0],
                     bound=0.25, kind='max')

    def _d_space(self, spec, points):
        table = map_analysis.distance_table(spec, points, 'D')
        return SampledSpace(labels=[f'p{i}' for i in range(len(points))], dist=table, kind=METRIC)

    def _crossratio(self, spec, report, rng, space_in, space_out, name):
        quads = bc.sample_quadruples(space_in.size, self.counts['quadruples'], rng)
        result = bc.crossratio_distortion(space_in, space_out, quads)
        self._record(report, spec, f'{name}.crossratio_linear_ratio', [result['worst_linear_ratio']],
                     bound=1.0, kind='max')
        self._record(report, spec, f'{name}.crossratio_skipped', [result['skipped']])

    def _invert(self, spec, report, rng):
        if not self._owner:
            return
        space = self._d_space(spec, self._boundary_sample(spec, rng, self.counts['points']))
        inverted = bc.invert_metric(space, 'p0')
        band = inverted.meta['sandwich']
        self._record(report, spec, 'invert.lower_ratio', [band['min']], bound=0.25, kind='min')
        self._record(report, spec, 'invert.upper_ratio', [band['max']], bound=1.0 + 1e-12, kind='max')
        self._crossratio(spec, report, rng, space.without('p0'), inverted, 'invert')

    def _sphericalize(self, spec, report, rng):
        if not self._owner:
            return
        space = self._d_space(spec, self._boundary_sample(spec, rng, self.counts['points']))
        spherical = bc.sphericalize(space, 'p0')
        band = spherical.meta['sandwich']
        self._record(report, spec, 'sphericalize.lower_ratio', [band['min']], bound=0.25, kind='min')
        self._record(report, spec, 'sphericalize.upper_ratio', [band['max']], bound=1.0 + 1e-12, kind='max')
        self._crossratio(spec, report, rng, space, spherical, 'sphericalize')

        _, roundtrip = bc.invert_then_sphericalize(space, 'p0', 'p1')
        self._record(report, spec, 'sphericalize.invert_roundtrip_band', [roundtrip['ratio']])
        weights = bc.sphericalized_measure_weight(spec.Q, space.dist[0])
        self._record(report, spec, 'sphericalize.measure_weight', weights)

    def _relation1(self, spec, report, rng):
        if not self._owner:
            return
        profile = self._profile(spec, report)
        if profile is None:
            return
        base = GroupPoint(np.zeros(spec.n), 0.0)
        epsilon = min(self._epsilon(spec), bc.epsilon0(spec), bc.epsilon1(spec))
        points = self._boundary_sample(spec, rng, self.counts['relation1_points'])
        bands = []
        for scale in (1.0, 2.0):
            result = bc.compare_parabolic_vs_inversion(
                spec, base, epsilon, spectrum_metrics.block_dilation(spec, points, scale), profile)
            bands.append(result['band'])
        self._record(report, spec, 'relation1.band', bands)
        self._record(report, spec, 'relation1.band_growth', [bands[1] / bands[0] - 1.0], bound=0.25, kind='max')

    # =========================================================================
    # MAP ANALYSIS
    # =========================================================================

    def _grid_map(self, spec, catalog_map, scale=1.0):
        return map_analysis.sample_map_at_scale(spec, catalog_map, scale, per_axis=self.config['maps']['per_axis'])

    def _leaf_map(self, spec, catalog_map, rng):
        cfg = self.config['maps']
        points = sampling.leaf_points(spec, cfg['leaves'], cfg['per_leaf'], rng)
        return map_analysis.sample_map(spec, catalog_map, points)

    def _linear_excess(self, profile):
        """Worst output ratio over input ratio; at most 1 for a map with eta(t) <= t."""
        t, out = profile.witness
        return [out / t]

    def _profile_of(self, spec, sampled_map, rng):
        return map_analysis.qs_profile(spec, sampled_map, triples=self.counts['triples'], rng=rng)

    def _qs_profile(self, spec, report, rng):
        if not self._owner:
            return
        cfg = self.config['maps']
        lam = cfg['similarity']
        identity = self._profile_of(spec, self._grid_map(spec, map_catalog.identity(spec)), rng)
        self._record(report, spec, 'qs.identity_linear_excess', self._linear_excess(identity),
                     bound=1.0 + 1e-9, kind='max')
        similar_map = self._grid_map(spec, map_catalog.similarity(spec, lam))
        similar = self._profile_of(spec, similar_map, rng)
        self._record(report, spec, 'qs.similarity_linear_excess', self._linear_excess(similar),
                     bound=1.0 + 1e-9, kind='max')

        fit = map_analysis.quasisimilarity_fit(spec, similar_map)
        self._record(report, spec, 'qs.similarity_K', [fit['K']], bound=1.0 + 1e-9, kind='max')
        self._record(report, spec, 'qs.similarity_C_error', [abs(fit['C'] - lam) / lam], bound=1e-9, kind='max')

        if spec.r < 2:
            return
        shear_map = self._grid_map(spec, map_catalog.shear(spec, 1.0))
        forward = map_analysis.quasisimilarity_fit(spec, shear_map)
        backward = map_analysis.quasisimilarity_fit(spec, shear_map.inverse())
        self._record(report, spec, 'qs.inverse_K_mismatch', [abs(backward['K'] / forward['K'] - 1.0)],
                     bound=0.1, kind='max')
        self._record(report, spec, 'qs.inverse_C_mismatch', [abs(backward['C'] * forward['C'] - 1.0)],
                     bound=0.1, kind='max')
        inverse_law = map_analysis.invert_profile(self._profile_of(spec, shear_map, rng))
        self._record(report, spec, 'qs.shear_inverse_profile', inverse_law['eta2'])

        rotation = map_catalog.rotation(spec, cfg['rotation'])
        eta_ones = [self._profile_of(spec, self._grid_map(spec, rotation, scale), rng).eta(1.0)
                    for scale in cfg['scales']]
        self._record(report, spec, 'qs.rotation_eta1_by_scale', eta_ones)
        at_small = self._profile_of(spec, self._grid_map(spec, rotation, 1e-3), rng).eta(1.0)
        # Mixed blocks distort by about s^(alpha_1/alpha_r - 1) at scale s
        expected = min(10.0, 0.5 * 1e-3 ** (spec.alpha1 / spec.alpha_r - 1.0))
        self._record(report, spec, 'qs.rotation_eta1_at_1e-3', [at_small], bound=expected, kind='min')

    def _foliation(self, spec, report, rng):
        if not self._owner or spec.r < 2:
            return
        cfg = self.config['maps']
        for catalog_map in (map_catalog.shear(spec, 1.0), map_catalog.similarity(spec, cfg['similarity'])):
            check = map_analysis.foliation_check(spec, self._leaf_map(spec, catalog_map, rng))
            self._record(report, spec, f'foliation.{catalog_map.name}.spread', [check['max_spread']],
                         bound=settings.SOLVGEOM['LEAF_TOL'], kind='max')
        rotation = map_catalog.rotation(spec, cfg['rotation'])
        check = map_analysis.foliation_check(spec, self._leaf_map(spec, rotation, rng))
        self._record(report, spec, 'foliation.rotation.broken_fraction',
                     [check['broken_leaves'] / check['leaves']], bound=1.0, kind='min')

    def _factorize(self, spec, report, rng):
        if not self._owner or spec.r < 2:
            return
        cfg = self.config['maps']
        lam = cfg['similarity']
        tail_power = spec.coord_alphas[spec.dims[0]:] / spec.alpha1

        similar = self._leaf_map(spec, map_catalog.similarity(spec, lam), rng)
        parts = map_analysis.factorize(spec, similar)
        g_error = np.max(np.abs(parts['G'].image - lam ** tail_power * parts['G'].domain))
        h_error = max(float(np.max(np.abs(h.image - lam * h.domain))) for _, h in parts['H'])
        self._record(report, spec, 'factorize.similarity_G_error', [g_error], bound=1e-12 * lam ** tail_power.max(),
                     kind='max')
        self._record(report, spec, 'factorize.similarity_H_error', [h_error], bound=1e-12 * lam, kind='max')

        shear = self._leaf_map(spec, map_catalog.shear(spec, 1.0), rng)
        parts = map_analysis.factorize(spec, shear)
        self._record(report, spec, 'factorize.shear_G_error',
                     [float(np.max(np.abs(parts['G'].image - parts['G'].domain)))], bound=0.0, kind='max')

        slack = self._tol('profile_slack', settings.SOLVGEOM['PROFILE_SLACK'])
        for catalog_map in (map_catalog.identity(spec), map_catalog.similarity(spec, lam),
                            map_catalog.shear(spec, 1.0)):
            sampled = self._leaf_map(spec, catalog_map, rng)
            eta_one = self._profile_of(spec, sampled, rng).eta(1.0)
            check = self._attempt(report, spec, 'l1', map_analysis.l1_inequality_check,
                                  spec, sampled, eta_one, radii=(0.25, 0.5, 1.0), slack=slack)
            if check is not None:
                self._record(report, spec, f'l1.{catalog_map.name}.violations', [check['violations']],
                             bound=0.0, kind='max')
                self._record(report, spec, f'l1.{catalog_map.name}.max_ratio', [check['max_ratio']])

    def _main_bound(self, spec, report, rng):
        if not self._owner:
            return
        cfg = self.config['maps']

        def at_scales(catalog_map):
            return [self._grid_map(spec, catalog_map, scale) for scale in cfg['scales']]

        similar = map_catalog.similarity(spec, cfg['similarity'])
        result = map_analysis.main_bound_check(spec, at_scales(similar), analytic_eta=similar.analytic_eta)
        self._record(report, spec, 'main.similarity_K_error', [abs(result['K'] - 1.0)], bound=1e-9, kind='max')
        if spec.r < 2:
            return

        for L in cfg['shear_L']:
            shear = map_catalog.shear(spec, L)
            result = map_analysis.main_bound_check(spec, at_scales(shear), analytic_eta=shear.analytic_eta)
            self._record(report, spec, f'main.shear({L:g}).K', [result['K']], bound=(1.0 + L) ** 2, kind='max')
            self._record(report, spec, f'main.shear({L:g}).consistent', [float(result['consistent'])],
                         bound=1.0, kind='min')

        try:
            map_analysis.main_bound_check(spec, at_scales(map_catalog.rotation(spec, cfg['rotation'])))
            diverged = 0.0
        except NotQuasisymmetric:
            diverged = 1.0
        spread = (max(cfg['scales']) / min(cfg['scales'])) ** (1.0 - spec.alpha1 / spec.alpha_r)
        if spread > 2.0 * settings.SOLVGEOM['DIVERGENCE_FACTOR']:
            self._record(report, spec, 'main.rotation_not_quasisymmetric', [diverged], bound=1.0, kind='min')
        else:
            # Scale range too narrow for this spectrum to separate the estimates
            self._record(report, spec, 'main.rotation_not_quasisymmetric', [diverged])

    def _height_respect(self, spec, report, rng):
        if not self._owner:
            return
        cfg = self.config['maps']
        box = cfg['group_box']
        count = self.counts['group_pairs']
        points = sampling.group_points(spec, 2 * count, rng, box=box)
        g = sampling.group_points(spec, 1, rng)[0]
        factors = np.ones(spec.r)
        factors[0] = 2.0

        maps = [map_catalog.left_translation(spec, g), map_catalog.block_dilation_group(spec, factors)]
        if spec.r >= 2:
            maps.append(map_catalog.rotation_shift(spec, cfg['rotation'], 1.0))
        for group_map in maps:
            sampled = map_analysis.sample_group_map(spec, group_map, points)
            boundary = map_analysis.sample_map(spec, group_map.trace, sampled.domain[:, :-1])
            result = map_analysis.height_respecting_check(spec, sampled, boundary)
            key = group_map.name.split('(')[0]
            self._record(report, spec, f'height.{key}.agree', [float(result['agree'])])
            if key != 'rotation_shift':
                self._record(report, spec, f'height.{key}.spread', [result['height_spread']],
                             bound=1e-9, kind='max')
                self._record(report, spec, f'height.{key}.boundary_K', [result['boundary_K']],
                             bound=2.0 + 1e-9, kind='max')

        dilation = map_catalog.block_dilation_group(spec, factors)
        pairs = [(2 * k, 2 * k + 1) for k in range(count)]
        defects = []
        for scale in (1.0, 2.0):
            scaled = [GroupPoint(p.x * scale, p.t) for p in points]
            sampled = map_analysis.sample_group_map(spec, dilation, scaled)
            defects.append(map_analysis.almost_isometry_defect(spec, sampled, pairs, mode=COARSE)['sup'])
        self._record(report, spec, 'height.block_dilation.almost_isometry_defect', defects)
        self._record(report, spec, 'height.block_dilation.defect_growth', [defects[1] - defects[0]])

    # =========================================================================
    # MODULUS
    # =========================================================================

    def _modulus(self, spec, report, rng):
        if not self._owner or spec.n < 2:
            return
        cfg = self.config['modulus']
        Q = cfg['Q'] or spec.Q
        p, q = np.zeros(spec.n), np.zeros(spec.n)
        q[0] = 1.0

        if spec.n == 2:
            # One segment per cross-section row; in n = 2 the closed form is h * l^(1 - Q) = h
            study = modulus.modulus_refinement_study(
                spec, lambda resolution: modulus.grid_cylinder_family(spec, p, q, cfg['radius'], resolution),
                cfg['resolutions'], Q=Q)
            values = [row['modulus'] for row in study['rows']]
            self._record(report, spec, 'modulus.cylinder', values)
            self._record(report, spec, 'modulus.cylinder_spread', [study['spread']], bound=0.1, kind='max')
            self._record(report, spec, 'modulus.admissibility',
                         [row['max_constraint_violation'] for row in study['rows']], bound=1e-8, kind='max')
            closed_form = 2.0 * cfg['radius']
            middle = values[len(values) // 2]
            self._record(report, spec, 'modulus.cylinder_closed_form_error',
                         [abs(middle - closed_form) / closed_form], bound=0.1, kind='max')

        single = modulus.build_cylinder_family(spec, p, q, cfg['radius'], 1)
        resolution = min(cfg['resolutions'])
        exact = modulus.single_curve_modulus(spec, single, resolution, Q=Q)
        solved = modulus.discrete_modulus(spec, single, resolution, Q=Q).energy
        self._record(report, spec, 'modulus.single_curve_error', [abs(solved - exact) / exact],
                     bound=1e-3, kind='max')
        bookkeeping = [abs(length - spectrum_metrics.d_length(spec, curve, refinement=single.refinement))
                       for curve, length in zip(single.curves, single.lengths)]
        self._record(report, spec, 'modulus.length_bookkeeping', bookkeeping, bound=1e-9, kind='max')

        if spec.r >= 2:
            diagonal = modulus.diagonal_family(spec, cfg['diagonal_count'])
            study = modulus.modulus_refinement_study(spec, diagonal, cfg['resolutions'], Q=Q)
            values = [row['modulus'] for row in study['rows']]
            self._record(report, spec, 'modulus.diagonal', values)
            self._record(report, spec, 'modulus.diagonal_decreasing', [float(study['decreasing'])],
                         bound=1.0, kind='min')
            self._record(report, spec, 'modulus.diagonal_final', [values[-1]], bound=0.05, kind='max')
