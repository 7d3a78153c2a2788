# solvgeom/services/map_analysis.py

# =============================================================================
# MAP ANALYSIS
# =============================================================================
# Distortion analysis of sampled self-maps of (R^n, D): quasisymmetry
# profiles, quasisimilarity fits, pointwise Lipschitz estimates, foliation
# detection, the leaf factorization F = (H, G) and the consistency checks
# built on them.
# =============================================================================

import itertools
import logging
import math

import numpy as np
from django.conf import settings
from scipy.optimize import brentq

from ..exceptions import (
    FoliationBroken,
    GeometryError,
    InconsistentPair,
    NotQuasisymmetric,
    SingleBlockSpectrum,
    SparseNeighborhood,
    TooFewPoints,
)
from ..models import GroupPoint, SampledGroupMap, SampledMap
from ..utils import sampling
from ..utils.profiles import accumulate_profile, pair_ratios
from .geodesic_solver import COARSE
from .group_geometry import distance
from .spectrum_metrics import dist_D, dist_DY, horizontal_part, leaf_part

logger = logging.getLogger('solvgeom')

METRICS = ('D', 'DY', 'euclidean')
EXHAUSTIVE_TRIPLES = 10 ** 6
NEIGHBORHOOD_MIN = 20


# =============================================================================
# SAMPLING AND DISTANCE TABLES
# =============================================================================

def sample_map(spec, catalog_map, points):
    """Evaluate a catalog map on sample ``points``."""
    points = spec.conform(np.atleast_2d(points))
    return SampledMap(domain=points, image=catalog_map(points),
                      injective=catalog_map.injective, name=catalog_map.name)


def sample_map_at_scale(spec, catalog_map, scale, per_axis=None, count=None, rng=None):
    """
    Sample a catalog map on a D-adapted grid (``per_axis``) or on ``count``
    seeded random points, both filling the D-ball of radius ``scale``.
    """
    if per_axis is not None:
        points = sampling.boundary_grid(spec, per_axis, scale=scale)
    elif count is not None and rng is not None:
        points = sampling.boundary_points(spec, count, rng, scale=scale)
    else:
        raise GeometryError('sample_map_at_scale needs per_axis or (count, rng)')
    return sample_map(spec, catalog_map, points)


def distance_table(spec, points, metric='D'):
    """Pairwise distance table of ``points`` in the chosen metric."""
    points = spec.conform(np.atleast_2d(points))
    if metric == 'D':
        return dist_D(spec, points[:, None, :], points[None, :, :])
    if metric == 'DY':
        ys = leaf_part(spec, points)
        return dist_DY(spec, ys[:, None, :], ys[None, :, :])
    if metric == 'euclidean':
        return np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    raise GeometryError(f'unknown metric {metric!r}; choose from {METRICS}')


def _tables(spec, sampled_map, metric):
    return (distance_table(spec, sampled_map.domain, metric),
            distance_table(spec, sampled_map.image, metric))


# =============================================================================
# QUASISYMMETRY AND QUASISIMILARITY
# =============================================================================

def qs_profile(spec, sampled_map, metric='D', triples=20000, rng=None, edges=None):
    """
    Ratio distortion profile of a sampled map.

    Every ordered triple of distinct points is used when there are at most
    EXHAUSTIVE_TRIPLES of them; otherwise ``triples`` are drawn from ``rng``.
    Triples with a zero denominator on either side are counted as degenerate.
    """
    size = sampled_map.size
    if size < 3:
        raise TooFewPoints(f'a quasisymmetry profile needs 3 points, got {size}')
    d_in, d_out = _tables(spec, sampled_map, metric)

    if size ** 3 <= EXHAUSTIVE_TRIPLES:
        idx = np.array([t for t in itertools.permutations(range(size), 3)])
    else:
        rng = rng if rng is not None else sampling.make_rng(0)
        idx = sampling.distinct_triples(size, triples, rng)
    x, y, z = idx.T

    num_in, den_in = d_in[x, y], d_in[x, z]
    num_out, den_out = d_out[x, y], d_out[x, z]
    valid = (den_in > 0) & (den_out > 0) & (num_in > 0)
    t = num_in[valid] / den_in[valid]
    out = num_out[valid] / den_out[valid]
    profile = accumulate_profile(t, out, edges=edges, degenerate=int(np.sum(~valid)))

    ratios = pair_ratios(d_in, d_out)
    if ratios.size:
        profile.k_plus = float(ratios.max())
        profile.k_minus = float(ratios.min())
    profile.notes = {'metric': metric, 'triples': int(valid.sum()), 'map': sampled_map.name}
    logger.debug(f'qs_profile {sampled_map.name}: {valid.sum()} triples, '
                 f'eta(1)={profile.eta(1.0):.6g}')
    return profile


def quasisimilarity_fit(spec, sampled_map, metric='D'):
    """
    Fit a K-quasisimilarity with constant C: C/K d <= d(F, F) <= C K d.

    Returns:
        dict with ``C`` (geometric mean of pair ratios), ``K``
        (max(K+/C, C/K-)), ``k_plus`` and ``k_minus``
    """
    if sampled_map.size < 2:
        raise TooFewPoints('a quasisimilarity fit needs 2 points')
    d_in, d_out = _tables(spec, sampled_map, metric)
    rows, cols = np.triu_indices(sampled_map.size, k=1)
    ratios = pair_ratios(d_in[rows, cols], d_out[rows, cols])
    if ratios.size == 0:
        raise TooFewPoints('no pair with a nonzero domain distance')
    if np.any(ratios == 0):
        return {'C': 0.0, 'K': math.inf, 'k_plus': float(ratios.max()), 'k_minus': 0.0}
    C = float(np.exp(np.mean(np.log(ratios))))
    k_plus, k_minus = float(ratios.max()), float(ratios.min())
    return {'C': C, 'K': max(k_plus / C, C / k_minus), 'k_plus': k_plus, 'k_minus': k_minus}


def invert_profile(profile):
    """
    eta_2(t) = 1 / eta^-1(1 / t) from the envelope's generalized inverse.

    The inverse of an empirical envelope is lossy: bins only bound the
    true function from below, so the result is reported as an estimate.
    """
    env = profile.envelope
    upper_edges = profile.edges[1:]
    eta2 = np.full(len(upper_edges), np.nan)
    for k, t in enumerate(upper_edges):
        reached = np.nonzero(env >= 1.0 / t)[0]
        if reached.size:
            eta2[k] = 1.0 / upper_edges[reached[0]]
    return {'t': upper_edges, 'eta2': eta2, 'lossy': True}


# =============================================================================
# POINTWISE DISTORTION
# =============================================================================

def _power_fit(radii, values):
    logs_r, logs_v = np.log(radii), np.log(values)
    slope = np.polyfit(logs_r, logs_v, 1)[0] if len(radii) > 1 else math.nan
    return float(np.exp(np.mean(logs_v - logs_r))), float(slope)


def pointwise_distortion(spec, sampled_map, x, radii, metric='D'):
    """
    Empirical L_g(x, r) = sup{d(gx, gx') : d(x, x') <= r} and
    l_g(x, r) = inf{d(gx, gx') : d(x, x') >= r}, plus limit estimates
    L_g(x), l_g(x) over the three smallest radii with the fitted exponent.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    domain = sampled_map.domain
    matches = np.nonzero(np.all(np.isclose(domain, spec.conform(x), rtol=0.0, atol=1e-12), axis=1))[0]
    if matches.size == 0:
        raise GeometryError('the center point is not in the sampled domain')
    center = matches[0]

    d_in = _row(spec, domain, center, metric)
    d_out = _row(spec, sampled_map.image, center, metric)
    others = np.arange(len(domain)) != center
    if np.sum(others & (d_in <= radii[-1])) < NEIGHBORHOOD_MIN:
        raise SparseNeighborhood(f'fewer than {NEIGHBORHOOD_MIN} sample points within radius {radii[-1]}')

    upper, lower = [], []
    for r in radii:
        inside = others & (d_in <= r)
        outside = others & (d_in >= r)
        upper.append(float(d_out[inside].max()) if inside.any() else np.nan)
        lower.append(float(d_out[outside].min()) if outside.any() else np.nan)
    upper, lower = np.array(upper), np.array(lower)

    smallest = slice(0, min(3, len(radii)))
    L_hat, L_slope = _power_fit(radii[smallest], upper[smallest])
    l_hat, l_slope = _power_fit(radii[smallest], lower[smallest])
    return {
        'radii': radii,
        'L_r': upper,
        'l_r': lower,
        'L': L_hat,
        'l': l_hat,
        'L_exponent': L_slope,
        'l_exponent': l_slope,
    }


def _row(spec, points, center, metric):
    if metric == 'D':
        return dist_D(spec, points[center], points)
    if metric == 'DY':
        ys = leaf_part(spec, points)
        return dist_DY(spec, ys[center], ys)
    return np.linalg.norm(points - points[center], axis=1)


# =============================================================================
# FOLIATION
# =============================================================================

PRESERVES = 'PRESERVES'
BREAKS = 'BREAKS'


def _leaf_groups(spec, sampled_map):
    ys = leaf_part(spec, sampled_map.domain)
    keys, inverse = np.unique(ys, axis=0, return_inverse=True)
    return keys, np.ravel(inverse)


def foliation_check(spec, sampled_map, tol=None):
    """
    D_Y-spread of the image of each sampled horizontal leaf.

    Leaves are the groups of domain points sharing their Y-part; leaves
    with a single sample point carry no information and are skipped.
    """
    if spec.r < 2:
        raise SingleBlockSpectrum('the horizontal foliation of a single-block spectrum is trivial')
    tol = settings.SOLVGEOM['LEAF_TOL'] if tol is None else tol
    keys, inverse = _leaf_groups(spec, sampled_map)
    image_ys = leaf_part(spec, sampled_map.image)

    spreads = []
    for leaf in range(len(keys)):
        members = image_ys[inverse == leaf]
        if len(members) < 2:
            continue
        spreads.append(float(np.max(dist_DY(spec, members[:, None, :], members[None, :, :]))))
    if not spreads:
        raise TooFewPoints('no sampled leaf holds two points')

    spreads = np.array(spreads)
    max_spread = float(spreads.max())
    verdict = PRESERVES if max_spread <= tol else BREAKS
    logger.info(f'foliation_check {sampled_map.name}: {len(spreads)} leaves, '
                f'max spread {max_spread:.3e} -> {verdict}')
    return {
        'max_spread': max_spread,
        'spreads': spreads,
        'leaves': len(spreads),
        'broken_leaves': int(np.sum(spreads > tol)),
        'verdict': verdict,
    }


def factorize(spec, sampled_map, tol=None):
    """
    F = (H, G) for a leaf-preserving sampled map: G acts on leaf labels
    y in Y, and H_y maps the first-block coordinates of leaf y.

    Returns:
        dict with ``G`` (SampledMap on Y) and ``H`` (list of (y, SampledMap))
    """
    check = foliation_check(spec, sampled_map, tol=tol)
    if check['verdict'] != PRESERVES:
        raise FoliationBroken(f'{sampled_map.name} moves leaves apart (spread {check["max_spread"]:.3e})')
    keys, inverse = _leaf_groups(spec, sampled_map)
    image_ys = leaf_part(spec, sampled_map.image)
    domain_x = horizontal_part(spec, sampled_map.domain)
    image_x = horizontal_part(spec, sampled_map.image)

    g_image = np.array([image_ys[inverse == leaf][0] for leaf in range(len(keys))])
    G = SampledMap(domain=keys, image=g_image, name=f'G[{sampled_map.name}]')
    H = []
    for leaf, y in enumerate(keys):
        members = inverse == leaf
        H.append((y, SampledMap(domain=domain_x[members], image=image_x[members],
                                name=f'H[{sampled_map.name}]')))
    return {'G': G, 'H': H, 'leaf_inverse': inverse}


def l1_inequality_check(spec, sampled_map, eta_one, radii, slack=None):
    """
    L_G(y, r) <= eta(1) l_H(x, r) (1 + slack) on every sampled leaf point
    and radius where both sides are defined. Distances on Y are D_Y;
    along a leaf D is Euclidean.
    """
    slack = settings.SOLVGEOM['PROFILE_SLACK'] if slack is None else slack
    parts = factorize(spec, sampled_map)
    G, H = parts['G'], parts['H']
    dy_in = dist_DY(spec, G.domain[:, None, :], G.domain[None, :, :])
    dy_out = dist_DY(spec, G.image[:, None, :], G.image[None, :, :])

    ratios, violations = [], 0
    for leaf, (_, h) in enumerate(H):
        if h.size < 2:
            continue
        dx_in = np.linalg.norm(h.domain[:, None, :] - h.domain[None, :, :], axis=-1)
        dx_out = np.linalg.norm(h.image[:, None, :] - h.image[None, :, :], axis=-1)
        others_y = np.arange(G.size) != leaf
        for r in radii:
            near = others_y & (dy_in[leaf] <= r)
            if not near.any():
                continue
            L_G = float(dy_out[leaf, near].max())
            for i in range(h.size):
                far = (np.arange(h.size) != i) & (dx_in[i] >= r)
                if not far.any():
                    continue
                l_H = float(dx_out[i, far].min())
                ratio = L_G / (eta_one * l_H) if l_H > 0 else math.inf
                ratios.append(ratio)
                violations += int(ratio > 1.0 + slack)
    if not ratios:
        raise TooFewPoints('no (leaf, point, radius) where both sides of the inequality are defined')
    return {'max_ratio': float(max(ratios)), 'count': len(ratios), 'violations': violations, 'slack': slack}


# =============================================================================
# QUASISIMILARITY BOUND
# =============================================================================

def _inverse_at_one(eta):
    """Solve eta(t) = 1 for monotone ``eta`` by expanding a bracket and brentq."""
    low, high = 1.0, 1.0
    while eta(low) > 1.0:
        low /= 2.0
    while eta(high) < 1.0:
        high *= 2.0
    if low == high:
        return low
    return brentq(lambda t: eta(t) - 1.0, low, high, xtol=1e-14)


def main_bound_check(spec, sampled_maps, analytic_eta=None, metric='D'):
    """
    Compare the fitted K of a quasisymmetric map with
    (eta(1) / eta^-1(1))^(2r + 2).

    Args:
        sampled_maps: samples of one map at several scales
        analytic_eta: closed-form eta; without it the bound comes from the
            empirical envelope and is only reported

    Raises:
        NotQuasisymmetric: eta(1) estimates diverge across scales
    """
    if not sampled_maps:
        raise TooFewPoints('main_bound_check needs at least one sampled map')
    profiles = [qs_profile(spec, m, metric=metric) for m in sampled_maps]
    eta_ones = np.array([p.eta(1.0) for p in profiles])
    if np.any(np.isnan(eta_ones)):
        raise TooFewPoints('a sample has no triple with ratio at most 1')
    divergence = float(eta_ones.max() / eta_ones.min())
    if divergence > settings.SOLVGEOM['DIVERGENCE_FACTOR']:
        raise NotQuasisymmetric(
            f'eta(1) ranges over [{eta_ones.min():.4g}, {eta_ones.max():.4g}] across scales'
        )

    fits = [quasisimilarity_fit(spec, m, metric=metric) for m in sampled_maps]
    K = max(fit['K'] for fit in fits)
    if analytic_eta is not None:
        eta_one, eta_inv_one = analytic_eta(1.0), _inverse_at_one(analytic_eta)
        source = 'analytic'
    else:
        merged = profiles[0]
        for profile in profiles[1:]:
            merged = merged.merge(profile)
        eta_one = merged.eta(1.0)
        reached = np.nonzero(merged.envelope >= 1.0)[0]
        eta_inv_one = float(merged.edges[reached[0] + 1]) if reached.size else math.nan
        source = 'empirical'
    bound = (eta_one / eta_inv_one) ** (2 * spec.r + 2)
    return {
        'K': K,
        'C': [fit['C'] for fit in fits],
        'eta_one': eta_one,
        'eta_inverse_one': eta_inv_one,
        'bound': bound,
        'source': source,
        'divergence': divergence,
        'consistent': bool(K <= bound * (1 + 1e-9)) if source == 'analytic' else None,
    }


# =============================================================================
# GROUP MAPS
# =============================================================================

def sample_group_map(spec, catalog_group_map, points):
    rows = np.array([p.as_array() for p in points])
    return SampledGroupMap(domain=rows, image=catalog_group_map(rows), name=catalog_group_map.name)


def height_respecting_check(spec, group_map, boundary_map, spread_limit=None, bilipschitz_limit=None):
    """
    Both sides of the equivalence between a height-respecting self-map of
    G_A and a bilipschitz boundary map.

    The height side reports sup |t(f(p)) - t(p)| and its spread over the
    sample; the boundary side fits a quasisimilarity in D.

    Raises:
        InconsistentPair: the boundary map is not the trace of the group map
    """
    conf = settings.SOLVGEOM
    spread_limit = conf['HEIGHT_SPREAD_LIMIT'] if spread_limit is None else spread_limit
    bilipschitz_limit = conf['BILIPSCHITZ_LIMIT'] if bilipschitz_limit is None else bilipschitz_limit

    lookup = {tuple(np.round(x, 12)): fx for x, fx in zip(boundary_map.domain, boundary_map.image)}
    matched = 0
    for row, image in zip(group_map.domain, group_map.image):
        key = tuple(np.round(row[:-1], 12))
        if key in lookup:
            matched += 1
            if not np.allclose(image[:-1], lookup[key], rtol=1e-9, atol=1e-9):
                raise InconsistentPair(f'boundary image of {row[:-1]} disagrees with the group map')
    if matched == 0:
        raise InconsistentPair('no group sample lies over a sampled boundary point')

    shifts = group_map.image[:, -1] - group_map.domain[:, -1]
    fit = quasisimilarity_fit(spec, boundary_map, metric='D')
    spread = float(shifts.max() - shifts.min())
    height_respecting = spread <= spread_limit
    bilipschitz = fit['K'] <= bilipschitz_limit and fit['C'] > 0
    if height_respecting != bilipschitz:
        logger.warning(f'height_respecting_check {group_map.name}: height-respecting={height_respecting} '
                       f'but boundary bilipschitz={bilipschitz} (K={fit["K"]:.4g})')
    return {
        'height_defect': float(np.max(np.abs(shifts))),
        'height_spread': spread,
        'height_respecting': height_respecting,
        'boundary_K': fit['K'],
        'boundary_C': fit['C'],
        'boundary_bilipschitz': bilipschitz,
        'agree': height_respecting == bilipschitz,
        'matched': matched,
    }


def almost_isometry_defect(spec, group_map, pairs, mode=COARSE):
    """sup |d(f p, f q) - d(p, q)| over index ``pairs`` of a SampledGroupMap."""
    defects = []
    for i, j in pairs:
        p, q = GroupPoint.from_array(group_map.domain[i]), GroupPoint.from_array(group_map.domain[j])
        fp, fq = GroupPoint.from_array(group_map.image[i]), GroupPoint.from_array(group_map.image[j])
        defects.append(abs(distance(spec, fp, fq, mode=mode) - distance(spec, p, q, mode=mode)))
    if not defects:
        raise TooFewPoints('almost_isometry_defect needs at least one pair')
    defects = np.array(defects)
    return {'sup': float(defects.max()), 'mean': float(defects.mean()), 'count': len(defects)}
