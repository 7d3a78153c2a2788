# solvgeom/services/modulus.py

# =============================================================================
# DISCRETE MODULUS
# =============================================================================
# Q-modulus of curve families in (R^n, D, Lebesgue) on axis-aligned grids.
# Horizontal families keep a positive modulus under refinement; families
# with a component along a snowflaked block lose it, because their per-step
# D-lengths grow without bound.
# =============================================================================

import logging
import math

import numpy as np
from django.conf import settings
from scipy import sparse
from scipy.linalg import null_space
from scipy.optimize import minimize
from scipy.stats import qmc

from ..exceptions import EmptyFamily, GeometryError, NonPositiveRadius, NotSameLeaf, UnboundedBox
from ..models import CurveFamily, GridDensity
from ..utils import csv_io
from .spectrum_metrics import dist_D, leaf_part

logger = logging.getLogger('solvgeom')


# =============================================================================
# CURVE FAMILIES
# =============================================================================

def build_cylinder_family(spec, p, q, radius, count):
    """
    ``count`` parallel translates of the segment pq spread over a
    cross-section disk of ``radius`` by a shifted Halton sequence.
    """
    p, q = spec.conform(p), spec.conform(q)
    if not radius > 0:
        raise NonPositiveRadius(f'cylinder radius must be positive, got {radius}')
    if int(count) < 1:
        raise GeometryError(f'count must be a positive integer, got {count!r}')
    if spec.r > 1 and not np.allclose(leaf_part(spec, p), leaf_part(spec, q),
                                      rtol=0.0, atol=settings.SOLVGEOM['LEAF_TOL']):
        raise NotSameLeaf('the segment endpoints lie on different horizontal leaves')
    direction = q - p
    length = np.linalg.norm(direction)
    if length == 0:
        raise GeometryError('cylinder axis has zero length')
    unit = direction / length

    if count == 1:
        offsets = np.zeros((1, spec.n))
    else:
        basis = null_space(unit[None, :])
        offsets = radius * _disk_points(basis.shape[1], int(count)) @ basis.T

    curves = [np.stack([p + offset, q + offset]) for offset in offsets]
    reach = radius * np.sqrt(np.clip(1.0 - unit ** 2, 0.0, None))
    family = CurveFamily(
        curves=curves,
        box_lo=np.minimum(p, q) - reach,
        box_hi=np.maximum(p, q) + reach,
        horizontal=True,
        name=f'cylinder(r={radius:g},count={count})',
    )
    logger.debug(f'build_cylinder_family: {family.size} segments of Euclidean length {length:.6g}')
    return family


def grid_cylinder_family(spec, p, q, radius, resolution):
    """
    Horizontal cylinder with one segment through the center of every
    cross-section cell of the D-adapted grid at ``resolution`` that lies
    within ``radius`` of the axis pq. The axis runs along a single
    first-block coordinate, so no row of cells is left without a curve.

    Raises:
        GeometryError: the axis is not a first-block coordinate direction,
            or the cross-section holds more than MODULUS_MAX_CURVES cells
    """
    p, q = spec.conform(p), spec.conform(q)
    if not radius > 0:
        raise NonPositiveRadius(f'cylinder radius must be positive, got {radius}')
    axis = np.flatnonzero(q - p)
    if len(axis) != 1 or axis[0] >= spec.dims[0]:
        raise GeometryError('a grid cylinder runs along one first-block coordinate')
    k = int(axis[0])
    box_lo, box_hi = p - radius, p + radius
    box_lo[k], box_hi[k] = min(p[k], q[k]), max(p[k], q[k])
    sides, shape = grid_geometry(spec, box_lo, box_hi, resolution)

    cross = [m for m in range(spec.n) if m != k]
    size = math.prod(shape[m] for m in cross)
    limit = settings.SOLVGEOM['MODULUS_MAX_CURVES']
    if size > limit:
        raise GeometryError(f'{size} cross-section cells at resolution {resolution} exceed {limit}')
    axes = [box_lo[m] + (np.arange(shape[m]) + 0.5) * sides[m] for m in cross]
    centers = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(cross))
    centers = centers[np.linalg.norm(centers - p[cross], axis=1) <= radius]

    curves = []
    for center in centers:
        start, end = p.copy(), q.copy()
        start[cross], end[cross] = center, center
        curves.append(np.stack([start, end]))
    family = CurveFamily(
        curves=curves,
        box_lo=box_lo,
        box_hi=box_hi,
        horizontal=True,
        name=f'grid_cylinder(r={radius:g},resolution={resolution})',
    )
    logger.debug(f'grid_cylinder_family: {family.size} segments at resolution {resolution}')
    return family


def _disk_points(dim, count):
    """``count`` low-discrepancy points of the closed unit ball in R^dim."""
    sampler = qmc.Halton(d=dim, scramble=False)
    points = np.empty((0, dim))
    while len(points) < count:
        batch = (sampler.random(2 * count) + 0.5 / count) % 1.0
        batch = 2.0 * batch - 1.0
        if dim > 1:
            batch = batch[np.linalg.norm(batch, axis=1) <= 1.0]
        points = np.vstack([points, batch])
    return points[:count]


def diagonal_family(spec, count, span=1.0):
    """
    Segments from (0, c) to (1, c + 1) in the plane of the first coordinate of
    blocks 1 and 2, for ``count`` offsets c evenly spread over [0, span].
    """
    if spec.r < 2:
        raise GeometryError('the diagonal family needs a second block')
    j = spec.starts[1]
    offsets = (np.arange(count) + 0.5) / count * span
    curves = []
    for c in offsets:
        start, end = np.zeros(spec.n), np.zeros(spec.n)
        start[j], end[0], end[j] = c, 1.0, c + 1.0
        curves.append(np.stack([start, end]))
    box_lo, box_hi = np.zeros(spec.n), np.zeros(spec.n)
    box_hi[0], box_hi[j] = 1.0, span + 1.0
    # Remaining coordinates are constant; give the grid a unit slab around them
    others = np.ones(spec.n, dtype=bool)
    others[[0, j]] = False
    box_lo[others], box_hi[others] = -0.5, 0.5
    return CurveFamily(curves=curves, box_lo=box_lo, box_hi=box_hi, horizontal=False,
                       name=f'diagonal(count={count})')


# =============================================================================
# TRAVERSAL
# =============================================================================

def _check_box(family):
    lo, hi = family.box_lo, family.box_hi
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
        raise UnboundedBox(f'grid box [{lo}, {hi}] is not a bounded nondegenerate box')


def grid_geometry(spec, box_lo, box_hi, resolution):
    """
    D-adapted cells over a box. The first coordinate is cut into
    ``resolution`` cells of side R; block-1 axes take side R and block-i
    axes R^(alpha_i / alpha_1).

    Returns:
        (cell sides, per-axis cell counts); the last cell on an axis may
        reach past ``box_hi``
    """
    base = (box_hi[0] - box_lo[0]) / int(resolution)
    sides = base ** (spec.coord_alphas / spec.alpha1)
    # Shave rounding so an exact multiple of the side does not gain a cell
    counts = np.ceil((box_hi - box_lo) / sides * (1.0 - 1e-12))
    return sides, tuple(int(c) for c in np.maximum(counts, 1))


def traversal_matrix(spec, family, resolution):
    """
    Sparse (curves x touched cells) matrix of D-lengths on the D-adapted
    grid of ``grid_geometry``.

    Every segment is cut into the same number of equal steps, at least
    ``resolution`` and enough that no step is longer than a cell side on
    any axis; a step contributes D(0, step) to the cell holding its
    midpoint. Steps outside the grid are dropped.

    Returns:
        (matrix, flat indices of the touched cells, cell sides, grid shape,
        steps per segment)
    """
    if family.size == 0:
        raise EmptyFamily('the family has no curves')
    _check_box(family)
    resolution = int(resolution)
    sides, shape = grid_geometry(spec, family.box_lo, family.box_hi, resolution)
    crossings = max(float(np.max(np.abs(np.diff(curve, axis=0)) / sides)) for curve in family.curves)
    steps = max(resolution, int(math.ceil(crossings * (1.0 - 1e-12))))
    fractions = (np.arange(steps) + 0.5) / steps
    origin = np.zeros(spec.n)
    limits = np.array(shape)

    rows, cols, vals = [], [], []
    for c, curve in enumerate(family.curves):
        for start, end in zip(curve[:-1], curve[1:]):
            weight = float(dist_D(spec, origin, (end - start) / steps))
            mids = start + fractions[:, None] * (end - start)
            idx = np.floor((mids - family.box_lo) / sides).astype(np.int64)
            inside = np.all((idx >= 0) & (idx < limits), axis=1)
            flat = np.ravel_multi_index(idx[inside].T, shape)
            rows.append(np.full(flat.size, c))
            cols.append(flat)
            vals.append(np.full(flat.size, weight))

    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    touched, columns = np.unique(cols, return_inverse=True)
    matrix = sparse.csr_matrix((vals, (rows, columns)), shape=(family.size, len(touched)))
    matrix.sum_duplicates()
    return matrix, touched, sides, shape, steps


# =============================================================================
# MODULUS
# =============================================================================

def discrete_modulus(spec, family, resolution, Q=None):
    """
    Minimize sum rho^Q mu(cell) subject to sum rho * (D-length in cell) >= 1
    for every curve.

    The concave dual over curve multipliers lambda >= 0 is maximized with
    L-BFGS-B; the primal density rho = (L^T lambda / (Q mu))^(1/(Q-1)) is then
    rescaled to be exactly admissible, so the returned energy is an upper
    bound whose gap to the dual value is recorded.

    Returns:
        GridDensity over the touched cells
    """
    Q = spec.Q if Q is None else float(Q)
    if not Q > 1:
        raise GeometryError(f'modulus exponent Q must exceed 1, got {Q}')
    conf = settings.SOLVGEOM
    L, touched, sides, shape, steps = traversal_matrix(spec, family, resolution)
    lengths = np.asarray(L.sum(axis=1)).ravel()
    if np.any(lengths <= 0):
        raise EmptyFamily(f'{int(np.sum(lengths <= 0))} curves never enter the grid box')
    family.lengths, family.refinement = lengths, steps

    mu = float(np.prod(sides))
    conj = Q / (Q - 1.0)
    LT = L.T.tocsr()

    def density(lam):
        s = LT @ lam
        return np.power(s / (Q * mu), 1.0 / (Q - 1.0))

    def negative_dual(lam):
        s = LT @ lam
        value = lam.sum() - (1.0 - 1.0 / Q) * np.sum(np.power(s, conj)) * (Q * mu) ** (1.0 - conj)
        grad = 1.0 - L @ density(lam)
        return -value, -grad

    # rho is homogeneous of degree 1/(Q-1) in lambda: scale the start to mean admissibility 1
    lam0 = np.ones(family.size)
    scale = np.median(L @ density(lam0))
    lam0 *= scale ** -(Q - 1.0)

    result = minimize(negative_dual, lam0, jac=True, method='L-BFGS-B',
                      bounds=[(0.0, None)] * family.size,
                      options={'maxiter': conf['MODULUS_MAX_ITER'], 'ftol': conf['MODULUS_RTOL'],
                               'gtol': 1e-10})
    rho = density(result.x)
    worst = float((L @ rho).min())
    if not worst > 0:
        raise EmptyFamily('the optimized density misses a curve entirely')
    rho = rho / worst
    dual_value = -float(result.fun)

    grid = GridDensity(
        box_lo=family.box_lo,
        box_hi=family.box_hi,
        resolution=int(resolution),
        cell_sides=sides,
        shape=shape,
        cells=np.array(np.unravel_index(touched, shape)).T,
        rho=rho,
        Q=Q,
        cell_measure=mu,
    )
    energy = grid.energy
    grid.diagnostics = {
        'modulus': energy,
        'dual': dual_value,
        'duality_gap': (energy - dual_value) / energy if energy > 0 else 0.0,
        'iterations': int(result.nit),
        'converged': bool(result.success),
        'max_constraint_violation': float(max(0.0, 1.0 - (L @ rho).min())),
        'cells': int(len(touched)),
    }
    logger.debug(f'discrete_modulus {family.name} at {resolution}: {energy:.6g} '
                 f'(gap {grid.diagnostics["duality_gap"]:.2e}, {result.nit} iterations)')
    return grid


def single_curve_modulus(spec, family, resolution, Q=None):
    """
    Closed-form modulus of a one-curve family: S^(1-Q) with
    S = sum_c L_c^(Q/(Q-1)) mu_c^(-1/(Q-1)).
    """
    if family.size != 1:
        raise GeometryError(f'single_curve_modulus needs exactly one curve, got {family.size}')
    Q = spec.Q if Q is None else float(Q)
    L, _, sides, _, _ = traversal_matrix(spec, family, resolution)
    weights = L.data
    if weights.size == 0:
        raise EmptyFamily('the curve never enters the grid box')
    mu = float(np.prod(sides))
    S = np.sum(weights ** (Q / (Q - 1.0))) * mu ** (-1.0 / (Q - 1.0))
    return float(S ** (1.0 - Q))


def modulus_refinement_study(spec, family, resolutions, Q=None):
    """
    Modulus per resolution and the ratio between consecutive values.
    ``family`` is a CurveFamily or a callable building one per resolution.

    Returns:
        dict with ``rows`` ({resolution, modulus, iterations,
        max_constraint_violation, duality_gap}), ``ratios`` and
        ``decreasing`` / ``spread`` summaries
    """
    resolutions = sorted(int(r) for r in resolutions)
    if len(resolutions) < 3:
        raise GeometryError('a refinement study needs at least three resolutions')
    build = family if callable(family) else (lambda resolution: family)
    rows = []
    for resolution in resolutions:
        current = build(resolution)
        if not rows:
            logger.info(f'=== MODULUS STUDY {current.name} ===')
        grid = discrete_modulus(spec, current, resolution, Q=Q)
        rows.append({
            'resolution': resolution,
            'modulus': grid.energy,
            'iterations': grid.diagnostics['iterations'],
            'max_constraint_violation': grid.diagnostics['max_constraint_violation'],
            'duality_gap': grid.diagnostics['duality_gap'],
            'curves': current.size,
            'mean_length': float(np.mean(current.lengths)),
        })
        logger.info(f'{current.name} at {resolution}: modulus {grid.energy:.6g}')
    values = np.array([row['modulus'] for row in rows])
    ratios = values[:-1] / values[1:]
    return {
        'rows': rows,
        'ratios': ratios.tolist(),
        'decreasing': bool(np.all(np.diff(values) < 0)),
        'spread': float(values.max() / values.min() - 1.0) if values.min() > 0 else math.inf,
    }


def export_density_csv(grid, path):
    csv_io.write_density(grid, path)


def export_family_csv(family, path):
    csv_io.write_curve_family(family, path)
