# solvgeom/services/spectrum_metrics.py
# Closed-form boundary (quasi)metrics on R^n, the boundary of G_A minus xi_0.
# Every function is vectorized over leading axes: x and y may be single
# vectors or stacks of shape (..., n).

import logging
import math

import numpy as np
from django.conf import settings
from scipy.optimize import minimize
from scipy.special import gamma

from ..exceptions import (
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
from ..models import Spectrum

logger = logging.getLogger('solvgeom')

MAX_BISECTIONS = 200


# =============================================================================
# SPECTRUM
# =============================================================================

def build_spectrum(pairs):
    """
    Validate ``(dimension, eigenvalue)`` pairs and build a Spectrum.

    Args:
        pairs: list of ``(dim, alpha)`` tuples or ``{'dim', 'alpha'}`` dicts,
            ordered by eigenvalue

    Returns:
        Spectrum

    Raises:
        EmptySpectrum, ZeroDimensionBlock, NonPositiveEigenvalue,
        NonIncreasingEigenvalues
    """
    if not pairs:
        raise EmptySpectrum()

    blocks = []
    for pair in pairs:
        if isinstance(pair, dict):
            dim, alpha = pair.get('dim'), pair.get('alpha')
        else:
            dim, alpha = pair
        if dim is None or int(dim) != dim or int(dim) < 1:
            raise ZeroDimensionBlock(f'block dimension {dim!r} is not a positive integer')
        alpha = float(alpha)
        if not alpha > 0 or not math.isfinite(alpha):
            raise NonPositiveEigenvalue(f'eigenvalue {alpha!r} is not a positive real')
        blocks.append((int(dim), alpha))

    for (_, previous), (_, current) in zip(blocks, blocks[1:]):
        if not current > previous:
            raise NonIncreasingEigenvalues(
                f'eigenvalue {current} does not exceed the previous block eigenvalue {previous}'
            )

    return Spectrum(tuple(blocks))


def block_norms(spec, d):
    """Euclidean norm of each block of ``d``; shape (..., r)."""
    d = spec.conform(d)
    return np.sqrt(np.add.reduceat(d * d, spec.starts, axis=-1))


def block_supernorm(spec, d):
    """The block supernorm max_i |d_i|^(1/alpha_i)."""
    return np.max(block_norms(spec, d) ** (1.0 / spec.alphas), axis=-1)


def block_dilation(spec, x, lam):
    """The D-similarity x_i -> lam^(alpha_i/alpha_1) x_i; scales D by ``lam``."""
    x = spec.conform(x)
    return x * np.power(lam, spec.coord_alphas / spec.alpha1)


# =============================================================================
# BOUNDARY (QUASI)METRICS
# =============================================================================

def dist_Ds(spec, x, y):
    """Parabolic quasimetric D_s(x, y) = max_i |x_i - y_i|^(1/alpha_i)."""
    return block_supernorm(spec, spec.conform(x) - spec.conform(y))


def dist_D(spec, x, y):
    """The metric D = D_s^alpha_1, computed blockwise as max |x_i - y_i|^(alpha_1/alpha_i)."""
    norms = block_norms(spec, spec.conform(x) - spec.conform(y))
    return np.max(norms ** (spec.alpha1 / spec.alphas), axis=-1)


def dist_DY(spec, y, y_prime):
    """
    D_Y on Y = blocks 2..r, the leaf space of the horizontal foliation.

    ``y`` and ``y_prime`` hold only the Y-coordinates (length n - n_1).
    """
    if spec.r < 2:
        raise SingleBlockSpectrum('D_Y needs a second block; the leaf space is a point')
    tail = Spectrum(spec.blocks[1:])
    delta = tail.conform(y) - tail.conform(y_prime)
    norms = block_norms(tail, delta)
    return np.max(norms ** (spec.alpha1 / tail.alphas), axis=-1)


def horizontal_part(spec, x):
    """First-block coordinates of ``x``."""
    return spec.conform(x)[..., : spec.dims[0]]


def leaf_part(spec, x):
    """Y-coordinates (blocks 2..r) of ``x``."""
    return spec.conform(x)[..., spec.dims[0]:]


def de_height(spec, x, y, tol=None):
    """
    Height t* with sum_i e^(-2 alpha_i t*) |x_i - y_i|^2 = 1.

    Writing t_i = ln|x_i - y_i| / alpha_i, the root lies in
    [max t_i, max t_i + ln(r) / (2 alpha_1)], so a fixed bracket plus
    bisection reaches ``tol`` (relative to max(1, |t*|)) without any search.
    Identical points give -inf.
    """
    tol = settings.SOLVGEOM['ROOT_TOL'] if tol is None else tol
    norms = block_norms(spec, spec.conform(x) - spec.conform(y))

    with np.errstate(divide='ignore'):
        block_heights = np.log(norms) / spec.alphas
    lower = np.max(block_heights, axis=-1)
    identical = np.isneginf(lower)
    lower = np.where(identical, 0.0, lower)
    upper = lower + math.log(spec.r) / (2.0 * spec.alpha1)
    safe_heights = np.where(identical[..., None], 0.0, block_heights)

    def phi(t):
        with np.errstate(over='ignore'):
            return np.sum(np.exp(-2.0 * spec.alphas * (t[..., None] - safe_heights)), axis=-1)

    # phi(lower) >= 1 >= phi(upper); phi is strictly decreasing.
    # Width is relative to max(1, |t|); the bracket halves at most MAX_BISECTIONS times
    for _ in range(MAX_BISECTIONS):
        if np.max((upper - lower) / np.maximum(1.0, np.abs(upper))) <= tol:
            break
        mid = 0.5 * (lower + upper)
        above = phi(mid) >= 1.0
        lower = np.where(above, mid, lower)
        upper = np.where(above, upper, mid)

    root = 0.5 * (lower + upper)
    return np.where(identical, -np.inf, root)


def dist_De(spec, x, y, tol=None):
    """
    D_e(x, y) = e^t* where the vertical geodesics over x and y sit at
    horospherical distance exactly 1 at height t*.

    D_e(x, x) is 0 by convention (the defining equation has no root).
    """
    return np.exp(de_height(spec, x, y, tol=tol))


def norm_constant(spec):
    """Upper sandwich constant r^(1 / (2 alpha_1)) of D_s <= D_e <= c D_s."""
    return spec.r ** (1.0 / (2.0 * spec.alpha1))


def check_norm_sandwich(spec, xs, ys, tol=None):
    """
    Worst signed violations of D_s <= D_e <= r^(1/(2 alpha_1)) D_s.

    Args:
        xs, ys: arrays of shape (m, n) holding distinct pairs

    Returns:
        dict with ``max_lower_violation``, ``max_upper_violation``,
        ``upper_constant`` and ``count``

    Raises:
        TooFewPoints: no pairs to evaluate
    """
    if np.size(xs) == 0 or np.size(ys) == 0:
        raise TooFewPoints('the norm sandwich needs at least one pair')
    ds = dist_Ds(spec, xs, ys)
    de = dist_De(spec, xs, ys, tol=tol)
    constant = norm_constant(spec)
    lower = ds - de
    upper = de - constant * ds
    return {
        'max_lower_violation': float(np.max(lower)),
        'max_upper_violation': float(np.max(upper)),
        'upper_constant': constant,
        'count': int(np.size(ds)),
        'lower_values': lower,
        'upper_values': upper,
    }


def check_triangle(spec, xs, ys, zs):
    """Per-triple D(x,z) - D(x,y) - D(y,z); nonpositive for a metric."""
    return dist_D(spec, xs, zs) - dist_D(spec, xs, ys) - dist_D(spec, ys, zs)


def quasi_triangle_constant(spec, xs, ys, zs):
    """
    Empirical worst D_s(x,z) / (D_s(x,y) + D_s(y,z)) over sampled triples,
    next to the constant 2^(1/alpha_1 - 1) (1 when alpha_1 >= 1) it should
    not exceed.
    """
    num = dist_Ds(spec, xs, zs)
    den = dist_Ds(spec, xs, ys) + dist_Ds(spec, ys, zs)
    valid = den > 0
    ratio = num[valid] / den[valid]
    theoretical = 2.0 ** (1.0 / spec.alpha1 - 1.0) if spec.alpha1 < 1 else 1.0
    return {
        'empirical': float(np.max(ratio)) if ratio.size else 0.0,
        'theoretical': theoretical,
        'count': int(ratio.size),
        'ratios': ratio,
    }


# =============================================================================
# MEASURE AND LENGTH
# =============================================================================

def unit_ball_volume(k):
    """Lebesgue volume of the Euclidean unit ball in R^k."""
    return math.pi ** (k / 2.0) / gamma(k / 2.0 + 1.0)


def ball_measure(spec, R):
    """
    Lebesgue measure of the D-ball of radius ``R``.

    D-balls are products of Euclidean block balls of radii R^(alpha_i/alpha_1),
    so the measure is prod_i omega_{n_i} R^(n_i alpha_i / alpha_1) = c R^Q.
    """
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise NonPositiveRadius(f'ball radius must be positive, got {R}')
    log_volume = sum(
        math.log(unit_ball_volume(dim)) for dim in spec.dims
    )
    return np.exp(log_volume + spec.Q * np.log(R))


def d_length(spec, polyline, refinement=1):
    """
    D-length of a polyline after cutting each segment into ``refinement``
    equal Euclidean parts.

    D is translation invariant, so each part of a segment with displacement
    delta contributes D(0, delta / refinement). Horizontal segments have a
    refinement-independent length; a block-i component grows like
    refinement^(1 - alpha_1/alpha_i).
    """
    vertices = spec.conform(np.atleast_2d(polyline))
    if len(vertices) < 2:
        raise TooFewVertices()
    # A fractional refinement rounds up to the next whole number of parts
    parts = math.ceil(refinement)
    if parts < 1:
        raise GeometryError(f'refinement must be positive, got {refinement!r}')
    steps = np.diff(vertices, axis=0) / parts
    origin = np.zeros(spec.n)
    return float(parts * np.sum(dist_D(spec, origin, steps)))


# =============================================================================
# HORIZONTAL FOLIATION
# =============================================================================

def leaf_hausdorff(spec, y1, y2):
    """Hausdorff D-distance between the leaves R^(n_1) x {y1} and R^(n_1) x {y2}."""
    return dist_DY(spec, y1, y2)


def point_to_leaf_distance(spec, p, y2):
    """
    D-distance from ``p`` to the leaf R^(n_1) x {y2}, minimized numerically
    over the leaf. Should agree with ``leaf_hausdorff`` of the two leaves.
    """
    if spec.r < 2:
        raise SingleBlockSpectrum()
    p = spec.conform(p)
    y2 = np.asarray(y2, dtype=float)
    x1 = horizontal_part(spec, p)

    def objective(z):
        return float(dist_D(spec, p, np.concatenate([z, y2])))

    # Start off the optimum so the search does real work
    start = x1 + 1.0 + np.abs(x1)
    result = minimize(objective, start, method='Nelder-Mead',
                      options={'xatol': 1e-12, 'fatol': 1e-14, 'maxiter': 4000})
    logger.debug(f'point_to_leaf_distance: {result.nit} iterations, value {result.fun:.12g}')
    return float(result.fun)
