# solvgeom/services/boundary_constructions.py

# =============================================================================
# BOUNDARY CONSTRUCTIONS
# =============================================================================
# Visual and parabolic (quasi)metrics on finite samples of the boundary, their
# chain metrization, metric inversion, sphericalization and the comparisons
# between them. Everything acts on SampledSpace tables; nothing here claims a
# continuum limit.
# =============================================================================

import logging
import math

import numpy as np
from django.conf import settings
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from ..exceptions import (
    BasepointDegenerate,
    DegenerateQuadruple,
    GeometryError,
    IdenticalPoints,
    TooFewPoints,
    TooManyBlocks,
)
from ..models import BoundaryPoint, GroupPoint, SampledSpace
from ..models.sampled_space import METRIC, QUASIMETRIC
from ..utils import csv_io
from ..utils.profiles import accumulate_profile
from . import geodesic_solver
from .geodesic_solver import COARSE, FULL
from .group_geometry import delta_hat, distance
from .spectrum_metrics import de_height, dist_D

logger = logging.getLogger('solvgeom')

INFINITY_LABEL = 'inf'
XI0_LABEL = 'xi0'


# =============================================================================
# CONFIGURED CONSTANTS
# =============================================================================

def epsilon0(spec):
    """Chain-metrization threshold; default min(alpha_1, 1 / (4 delta_hat + 1))."""
    configured = settings.SOLVGEOM.get('EPSILON0')
    if configured is not None:
        return float(configured)
    return min(spec.alpha1, 1.0 / (4.0 * delta_hat(spec) + 1.0))


def epsilon1(spec):
    """Visual-metric threshold; defaults to epsilon0."""
    configured = settings.SOLVGEOM.get('EPSILON1')
    if configured is not None:
        return float(configured)
    return epsilon0(spec)


# =============================================================================
# GROMOV PRODUCTS AND VISUAL QUASIMETRICS
# =============================================================================

def ray_point(xi, base, T):
    """
    Point at parameter T on the ray from base height toward ``xi``: up the
    vertical line over the base for xi_0, down the line over xi otherwise.
    """
    if xi.is_xi0:
        return GroupPoint(base.x, base.t + T)
    return GroupPoint(xi.x, base.t - T)


def _distance_from_base(spec, base, xi, T, mode):
    if xi.is_xi0 or np.array_equal(xi.x, base.x):
        return float(T)
    return distance(spec, base, ray_point(xi, base, T), mode=mode)


def gromov_product_profile(spec, xi, eta, base, heights=None, mode=COARSE):
    """
    Gromov products (xi|eta)_base evaluated along the rays at each height T.

    Returns:
        dict with ``value`` (at the largest height), ``by_height`` and
        ``spread`` (max - min over heights)
    """
    if xi.same_as(eta):
        raise IdenticalPoints('the Gromov product of a boundary point with itself is infinite')
    heights = settings.SOLVGEOM['GROMOV_HEIGHTS'] if heights is None else heights
    by_height = {}
    for T in sorted(float(h) for h in heights):
        x_t = ray_point(xi, base, T)
        y_t = ray_point(eta, base, T)
        d_x = _distance_from_base(spec, base, xi, T, mode)
        d_y = _distance_from_base(spec, base, eta, T, mode)
        d_xy = distance(spec, x_t, y_t, mode=mode)
        by_height[T] = 0.5 * (d_x + d_y - d_xy)
    values = list(by_height.values())
    return {
        'value': values[-1],
        'by_height': by_height,
        'spread': max(values) - min(values),
    }


def gromov_product(spec, xi, eta, base, heights=None, mode=COARSE):
    """(xi|eta)_base at the largest configured height; accurate to the hyperbolicity scale."""
    return gromov_product_profile(spec, xi, eta, base, heights=heights, mode=mode)['value']


def visual_quasimetric(spec, base, epsilon, eta1, eta2, heights=None, mode=COARSE):
    """e^(-epsilon (eta1|eta2)_base); zero on the diagonal."""
    if eta1.same_as(eta2):
        return 0.0
    return math.exp(-epsilon * gromov_product(spec, eta1, eta2, base, heights=heights, mode=mode))


# =============================================================================
# GEODESIC TOP HEIGHTS AND PARABOLIC QUASIMETRICS
# =============================================================================

def normalized_top_height(spec, u, mode=FULL):
    """
    Top height of the geodesic joining boundary points 0 and ``u`` when
    D_e(0, u) = 1, truncated BOUNDARY_DEPTH / alpha_1 below height 0.
    """
    depth = settings.SOLVGEOM['BOUNDARY_DEPTH'] / spec.alpha1
    lifted = np.exp(spec.coord_alphas * depth) * np.asarray(u, dtype=float)
    result = geodesic_solver.solve_normalized(spec, lifted, 0.0, mode=mode)
    return result.top_height - depth


class TopHeightProfile:
    """
    Interpolated top height tau(u) over the D_e unit sphere.

    Rotations inside a block are isometries commuting with the dilations, so
    tau depends only on the block norms of u. Those are parametrized by
    spherical angles: none for r = 1, theta for r = 2, (theta, phi) for r = 3.
    """

    MAX_BLOCKS = 3

    def __init__(self, spec, nodes=None, mode=FULL):
        if spec.r > self.MAX_BLOCKS:
            raise TooManyBlocks(f'top-height profiles cover at most {self.MAX_BLOCKS} blocks, '
                                f'spectrum {spec.label} has {spec.r}')
        self.spec = spec
        self.nodes = nodes or {1: 1, 2: 33, 3: 13}[spec.r]
        self.mode = mode
        self._build()

    def _representative(self, angles):
        norms = self._norms(angles)
        u = np.zeros(self.spec.n)
        u[self.spec.starts] = norms
        return u

    @staticmethod
    def _norms(angles):
        if len(angles) == 0:
            return np.array([1.0])
        if len(angles) == 1:
            theta, = angles
            return np.array([math.cos(theta), math.sin(theta)])
        theta, phi = angles
        return np.array([math.cos(theta), math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi)])

    def _build(self):
        spec = self.spec
        if spec.r == 1:
            self._constant = normalized_top_height(spec, self._representative(()), mode=self.mode)
            self._interpolator = None
            return
        axis = np.linspace(0.0, math.pi / 2.0, self.nodes)
        axes = (axis,) * (spec.r - 1)
        grid = np.meshgrid(*axes, indexing='ij')
        values = np.empty(grid[0].shape)
        for index in np.ndindex(values.shape):
            angles = tuple(g[index] for g in grid)
            values[index] = normalized_top_height(spec, self._representative(angles), mode=self.mode)
        method = 'cubic' if self.nodes >= 4 else 'linear'
        self._interpolator = RegularGridInterpolator(axes, values, method=method)
        logger.info(f'Top-height profile for {spec.label}: {values.size} nodes, '
                    f'range [{values.min():.4f}, {values.max():.4f}]')

    def angles(self, u):
        norms = np.sqrt(np.add.reduceat(np.asarray(u, dtype=float) ** 2, self.spec.starts, axis=-1))
        if self.spec.r == 2:
            return np.arctan2(norms[..., 1], norms[..., 0])[..., None]
        theta = np.arccos(np.clip(norms[..., 0] / np.linalg.norm(norms, axis=-1), -1.0, 1.0))
        phi = np.arctan2(norms[..., 2], norms[..., 1])
        return np.stack([theta, phi], axis=-1)

    def __call__(self, u):
        if self._interpolator is None:
            return np.full(np.shape(u)[:-1], self._constant) if np.ndim(u) > 1 else self._constant
        values = self._interpolator(self.angles(u))
        return values if np.ndim(u) > 1 else float(np.ravel(values)[0])


def normalize_boundary_pair(spec, eta1, eta2):
    """Isometric normalization: eta1 -> 0 and D_e -> 1. Returns (t0, u)."""
    t0 = de_height(spec, eta1, eta2)
    u = np.exp(-spec.coord_alphas * np.asarray(t0)[..., None]) * (spec.conform(eta2) - spec.conform(eta1))
    return t0, u


def geodesic_top_height(spec, eta1, eta2, profile=None, mode=FULL):
    """
    Height of the highest point of the geodesic joining boundary points
    ``eta1`` and ``eta2``: ln D_e(eta1, eta2) + tau(u) after normalization.
    """
    if np.array_equal(spec.conform(eta1), spec.conform(eta2)):
        raise IdenticalPoints()
    t0, u = normalize_boundary_pair(spec, eta1, eta2)
    tau = profile(u) if profile is not None else normalized_top_height(spec, u, mode=mode)
    return float(t0) + float(tau)


def parabolic_quasimetric(spec, params, eta1, eta2, profile=None, mode=FULL):
    """
    D_{xi_0, base, epsilon}(eta1, eta2) = e^(-epsilon H) with H the infimum of
    the xi_0 Busemann function over the geodesic eta1 eta2, that is
    t_base - t_top.
    """
    if not params.xi.is_xi0:
        raise GeometryError('parabolic quasimetrics are implemented for xi = xi_0')
    if np.array_equal(spec.conform(eta1), spec.conform(eta2)):
        return 0.0
    top = geodesic_top_height(spec, eta1, eta2, profile=profile, mode=mode)
    return math.exp(params.epsilon * (top - params.base.t))


def top_height_table(spec, points, profile):
    """Symmetric table of geodesic top heights over sample pairs (diagonal NaN)."""
    points = spec.conform(np.atleast_2d(points))
    size = len(points)
    rows, cols = np.triu_indices(size, k=1)
    t0, u = normalize_boundary_pair(spec, points[rows], points[cols])
    tops = np.full((size, size), np.nan)
    tops[rows, cols] = t0 + profile(u)
    tops[cols, rows] = tops[rows, cols]
    return tops


def parabolic_space(spec, points, base, epsilon, tops):
    """Parabolic quasimetric SampledSpace from a top-height table."""
    with np.errstate(invalid='ignore'):
        dist = np.exp(epsilon * (tops - base.t))
    np.fill_diagonal(dist, 0.0)
    return SampledSpace(
        labels=[f'p{i}' for i in range(len(points))],
        dist=dist,
        kind=QUASIMETRIC,
        coords=np.asarray(points, dtype=float),
        meta={'epsilon': epsilon, 'base_height': base.t},
    )


# =============================================================================
# CHAIN METRIZATION, INVERSION, SPHERICALIZATION
# =============================================================================

def chain_metrize(space):
    """
    Largest metric on the sample dominated by the quasidistance table: the
    all-pairs shortest-path closure over chains of sample points.
    """
    graph = csgraph_from_dense(space.dist, null_value=np.inf)
    closed = shortest_path(graph, method='FW', directed=False)
    closed = 0.5 * (closed + closed.T)
    np.fill_diagonal(closed, 0.0)
    return SampledSpace(
        labels=space.labels,
        dist=closed,
        kind=METRIC,
        basepoint=space.basepoint,
        coords=space.coords,
        meta=dict(space.meta),
    )


def sandwich_band(reference, metric):
    """Min and max of metric / reference over off-diagonal pairs."""
    rows, cols = np.triu_indices(reference.size, k=1)
    ref = reference.dist[rows, cols]
    valid = ref > 0
    ratio = metric.dist[rows, cols][valid] / ref[valid]
    if ratio.size == 0:
        return {'min': None, 'max': None, 'count': 0}
    return {'min': float(ratio.min()), 'max': float(ratio.max()), 'count': int(ratio.size)}


def _record_sandwich(result, quasi, lower_factor, name):
    band = sandwich_band(quasi, result)
    band['lower_factor'] = lower_factor
    band['holds'] = band['count'] == 0 or (band['min'] >= lower_factor * (1 - 1e-12) and band['max'] <= 1 + 1e-12)
    if not band['holds']:
        logger.warning(f'{name}: sandwich [{lower_factor}, 1] violated: {band}')
    result.meta['sandwich'] = band
    result.meta['quasi'] = quasi
    return result


def invert_metric(space, p):
    """
    Metric inversion at ``p``: chain metrization of
    rho_p(x, y) = d(x, y) / (d(x, p) d(y, p)) on the sample minus p.
    The result lies in [rho_p / 4, rho_p].
    """
    center = space.index(p)
    to_p = space.dist[center]
    keep = [i for i in range(space.size) if i != center]
    if np.any(to_p[keep] == 0):
        raise BasepointDegenerate(f'a sample point coincides with the inversion point {p!r}')
    sub = space.dist[np.ix_(keep, keep)]
    scale = to_p[keep]
    rho = sub / np.outer(scale, scale)
    quasi = SampledSpace(
        labels=[space.labels[i] for i in keep],
        dist=0.5 * (rho + rho.T),
        kind=QUASIMETRIC,
        coords=None if space.coords is None else space.coords[keep],
    )
    result = chain_metrize(quasi)
    result.basepoint = space.labels[center]
    return _record_sandwich(result, quasi, 0.25, 'invert_metric')


def sphericalize(space, p):
    """
    Sphericalization at ``p``: chain metrization of
    s_p(x, y) = d(x, y) / ((1 + d(x, p)) (1 + d(y, p))) with a point at
    infinity, s_p(x, inf) = 1 / (1 + d(x, p)). The result lies in [s_p / 4, s_p].
    """
    center = space.index(p)
    if INFINITY_LABEL in space.labels:
        raise GeometryError(f'label {INFINITY_LABEL!r} is reserved for the added point')
    shift = 1.0 + space.dist[center]
    size = space.size
    s = np.zeros((size + 1, size + 1))
    s[:size, :size] = space.dist / np.outer(shift, shift)
    s[:size, size] = s[size, :size] = 1.0 / shift
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 0.0)
    quasi = SampledSpace(labels=space.labels + [INFINITY_LABEL], dist=s, kind=QUASIMETRIC)
    result = chain_metrize(quasi)
    result.basepoint = space.labels[center]
    return _record_sandwich(result, quasi, 0.25, 'sphericalize')


def invert_then_sphericalize(space, p, q):
    """
    Invert a bounded space at ``p``, then sphericalize at ``q``; the map that is
    the identity off p and sends p to the added infinity is bilipschitz.

    Returns:
        (resulting SampledSpace, band of distance ratios against the original)
    """
    if str(p) == str(q):
        raise GeometryError('inversion and sphericalization points must differ')
    inverted = invert_metric(space, p)
    spherical = sphericalize(inverted, q)
    relabel = {str(p): INFINITY_LABEL}
    order = [spherical.index(relabel.get(label, label)) for label in space.labels]
    comparable = SampledSpace(
        labels=space.labels,
        dist=spherical.dist[np.ix_(order, order)],
        kind=METRIC,
    )
    band = sandwich_band(space, comparable)
    band['ratio'] = band['max'] / band['min'] if band['count'] else None
    return spherical, band


def sphericalized_measure_weight(Q, d_to_p):
    """Radon-Nikodym weight (1 + d(p, x))^(-2Q) of the sphericalized measure."""
    if not Q > 1:
        raise GeometryError(f'measure exponent Q must exceed 1, got {Q}')
    return (1.0 + np.asarray(d_to_p, dtype=float)) ** (-2.0 * Q)


# =============================================================================
# CROSS-RATIOS
# =============================================================================

def sample_quadruples(size, count, rng):
    """``count`` random quadruples of distinct indices in range(size)."""
    if size < 4:
        raise GeometryError('cross-ratios need at least four points')
    quads = np.empty((0, 4), dtype=int)
    while len(quads) < count:
        batch = rng.integers(0, size, size=(2 * (count - len(quads)) + 8, 4))
        ordered = np.sort(batch, axis=1)
        distinct = np.all(np.diff(ordered, axis=1) > 0, axis=1)
        quads = np.vstack([quads, batch[distinct]])
    return quads[:count]


def cross_ratio(dist, quads):
    """
    [x1, x2, x3, x4] = d(x1, x3) d(x2, x4) / (d(x1, x4) d(x2, x3)); NaN where
    a denominator vanishes.
    """
    a, b, c, d = quads.T
    num = dist[a, c] * dist[b, d]
    den = dist[a, d] * dist[b, c]
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def crossratio_distortion(space_in, space_out, quadruples, eta_factor=16.0):
    """
    Cross-ratio distortion of the identity between two spaces on shared labels.

    Args:
        quadruples: index rows into ``space_in``
        eta_factor: slope of the linear control function to compare against

    Returns:
        dict with the DistortionProfile, the worst output / (factor * input)
        and the number of skipped degenerate quadruples
    """
    quadruples = np.asarray(quadruples, dtype=int)
    if len(quadruples) == 0:
        raise DegenerateQuadruple('no quadruples to measure')
    order = np.array([space_out.index(label) for label in space_in.labels])
    t = cross_ratio(space_in.dist, quadruples)
    out = cross_ratio(space_out.dist, order[quadruples])
    valid = np.isfinite(t) & np.isfinite(out) & (t > 0)
    skipped = int(np.sum(~valid))
    if skipped:
        logger.warning(f'crossratio_distortion: skipped {skipped} degenerate quadruples')
    if not np.any(valid):
        raise DegenerateQuadruple('every sampled quadruple is degenerate')
    profile = accumulate_profile(t[valid], out[valid], degenerate=skipped)
    return {
        'profile': profile,
        'worst_linear_ratio': float(np.max(out[valid] / (eta_factor * t[valid]))),
        'max_ratio': float(np.max(out[valid] / t[valid])),
        'count': int(np.sum(valid)),
        'skipped': skipped,
    }


# =============================================================================
# COMPARISONS
# =============================================================================

def parabolic_chain_metric(spec, points, base, epsilon, profile):
    tops = top_height_table(spec, points, profile)
    return chain_metrize(parabolic_space(spec, points, base, epsilon, tops)), tops


def visual_space_with_xi0(spec, points, base, epsilon, T=20.0, mode=COARSE):
    """
    Visual quasimetric on the sample plus a proxy label for xi_0, built from
    Gromov products at the single height T.
    """
    points = spec.conform(np.atleast_2d(points))
    size = len(points)
    heights = (T,)
    boundary = [BoundaryPoint(x) for x in points] + [BoundaryPoint.xi0()]
    dist = np.zeros((size + 1, size + 1))
    for i in range(size + 1):
        for j in range(i + 1, size + 1):
            product = gromov_product(spec, boundary[i], boundary[j], base, heights=heights, mode=mode)
            dist[i, j] = dist[j, i] = math.exp(-epsilon * product)
    return SampledSpace(labels=[f'p{i}' for i in range(size)] + [XI0_LABEL], dist=dist, kind=QUASIMETRIC)


def ratio_report(numerator, denominator):
    rows, cols = np.triu_indices(numerator.shape[0], k=1)
    num = numerator[rows, cols]
    den = denominator[rows, cols]
    valid = (den > 0) & np.isfinite(num) & np.isfinite(den)
    ratio = num[valid] / den[valid]
    if ratio.size == 0:
        raise GeometryError('no comparable pairs in the sample')
    return {
        'min': float(ratio.min()),
        'max': float(ratio.max()),
        'band': float(ratio.max() / ratio.min()),
        'count': int(ratio.size),
        'percentiles': {str(q): float(v) for q, v in zip((5, 50, 95), np.percentile(ratio, [5, 50, 95]))},
    }


def compare_parabolic_vs_inversion(spec, base, epsilon, points, profile, T=20.0, mode=COARSE):
    """
    Ratio band between the chain-metrized parabolic metric and the metric
    inversion, about the xi_0 proxy, of the chain-metrized visual metric.
    """
    limit = min(epsilon0(spec), epsilon1(spec))
    if epsilon > limit * (1 + 1e-12):
        raise GeometryError(f'epsilon {epsilon} exceeds min(epsilon0, epsilon1) = {limit}')
    parabolic, _ = parabolic_chain_metric(spec, points, base, epsilon, profile)
    visual = chain_metrize(visual_space_with_xi0(spec, points, base, epsilon, T=T, mode=mode))
    inverted = invert_metric(visual, XI0_LABEL)
    order = [inverted.index(label) for label in parabolic.labels]
    return ratio_report(parabolic.dist, inverted.dist[np.ix_(order, order)])


def compare_parabolic_vs_D(spec, base, points, profile):
    """Ratio band of the parabolic quasimetric with epsilon = alpha_1 against D."""
    points = spec.conform(np.atleast_2d(points))
    tops = top_height_table(spec, points, profile)
    with np.errstate(invalid='ignore'):
        parabolic = np.exp(spec.alpha1 * (tops - base.t))
    d = dist_D(spec, points[:, None, :], points[None, :, :])
    return ratio_report(parabolic, d)


def parameter_band_check(spec, base1, base2, epsilon, points, profile, c=None):
    """
    Changing the base point moves the chain-metrized parabolic metric by one
    multiplicative band, expected within (2 e^(c epsilon))^2.
    """
    c = settings.SOLVGEOM['PARAMETER_C'] if c is None else c
    first, tops = parabolic_chain_metric(spec, points, base1, epsilon, profile)
    second = chain_metrize(parabolic_space(spec, points, base2, epsilon, tops))
    report = ratio_report(second.dist, first.dist)
    report['bound'] = (2.0 * math.exp(c * epsilon)) ** 2
    return report


def parameter_eta_check(spec, base, eps1, eps2, points, profile, triples, rng):
    """
    Quasisymmetry of the identity from the eps1- to the eps2-parabolic metric,
    against eta(t) = 2^(1 + eps2/eps1) t^(eps2/eps1).
    """
    first, tops = parabolic_chain_metric(spec, points, base, eps1, profile)
    second = chain_metrize(parabolic_space(spec, points, base, eps2, tops))
    size = first.size
    idx = rng.integers(0, size, size=(triples, 3))
    idx = idx[(idx[:, 0] != idx[:, 1]) & (idx[:, 0] != idx[:, 2]) & (idx[:, 1] != idx[:, 2])]
    if len(idx) == 0:
        raise TooFewPoints(f'no triple of distinct points among {size} samples')
    x, y, z = idx.T
    t = first.dist[x, y] / first.dist[x, z]
    out = second.dist[x, y] / second.dist[x, z]
    power = eps2 / eps1
    bound = 2.0 ** (1.0 + power) * t ** power
    return {
        'profile': accumulate_profile(t, out),
        'worst_ratio_to_bound': float(np.max(out / bound)),
        'count': int(len(t)),
    }


# =============================================================================
# EXPORT
# =============================================================================

def sampled_space_to_csv(space, path):
    csv_io.write_sampled_space(space, path)


def sampled_space_from_csv(path):
    return csv_io.read_sampled_space(path)
