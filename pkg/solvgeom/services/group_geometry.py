# solvgeom/services/group_geometry.py
# Riemannian geometry of G_A = R^n x_A R with the metric e^(-2tA) dx^2 + dt^2:
# group law, distances, Busemann functions, quasicenters and the horosphere
# distance estimates.

import logging
import math

import numpy as np
from django.conf import settings
from scipy.optimize import minimize_scalar

from ..exceptions import GeometryError, IdenticalPoints, MultiBlockSpectrum
from ..models import GeodesicPath, GroupPoint
from . import geodesic_solver
from .geodesic_solver import COARSE, FULL
from .spectrum_metrics import de_height

logger = logging.getLogger('solvgeom')


# =============================================================================
# GROUP LAW AND METRIC
# =============================================================================

def metric_tensor(spec, p):
    """Diagonal form diag(e^(-2 alpha_i t) repeated n_i times, 1) at ``p``."""
    return np.diag(np.append(np.exp(-2.0 * spec.coord_alphas * p.t), 1.0))


def horospherical_distance(spec, x, y, t):
    """Distance |e^(-tA)(x - y)| inside the horosphere R^n x {t}."""
    delta = spec.conform(x) - spec.conform(y)
    return np.sqrt(np.sum(np.exp(-2.0 * spec.coord_alphas * np.asarray(t)[..., None]) * delta ** 2,
                          axis=-1))


def left_translate(spec, g, p):
    """Group product (x, t) . (y, s) = (x + e^(tA) y, t + s)."""
    return GroupPoint(g.x + np.exp(spec.coord_alphas * g.t) * p.x, g.t + p.t)


def inverse(spec, g):
    """Group inverse (x, t)^-1 = (-e^(-tA) x, -t)."""
    return GroupPoint(-np.exp(-spec.coord_alphas * g.t) * g.x, -g.t)


def vertical_shift(spec, s):
    """The group element (0, s); left translation by it dilates R^n by e^(sA)."""
    return GroupPoint(np.zeros(spec.n), s)


def delta_hat(spec):
    """
    Reporting reference for the hyperbolicity constant: ln(1 + sqrt 2) / alpha_1,
    the value for curvature -alpha_1^2. Overridden by SOLVGEOM['DELTA_HAT'].
    """
    configured = settings.SOLVGEOM.get('DELTA_HAT')
    if configured is not None:
        return float(configured)
    return math.log(1.0 + math.sqrt(2.0)) / spec.alpha1


# =============================================================================
# GEODESICS AND DISTANCE
# =============================================================================

def integrate_geodesic(spec, p, v, T, samples=201):
    """
    Unit-speed geodesic from ``p`` with initial velocity ``v`` over [0, T].

    Args:
        v: tangent vector (dx, dt) of unit Riemannian norm at ``p``
        T: parameter length; negative values run the geodesic backwards
        samples: number of evenly spaced output samples

    Raises:
        InvalidVelocity, StepSizeUnderflow
    """
    momentum, vt = geodesic_solver.check_unit_velocity(spec, p.t, v)
    params = np.linspace(0.0, float(T), samples)
    sol = geodesic_solver.flow(spec, p.x, p.t, momentum, vt, T, t_eval=params)

    heights = sol.y[spec.n]
    speeds = np.sqrt(geodesic_solver.speed_squared(spec, heights, momentum, sol.y[spec.n + 1]))
    drift = float(np.max(np.abs(speeds - 1.0)))
    if drift > 1e-8 * max(1.0, abs(T)):
        logger.warning(f'integrate_geodesic: unit speed drifted by {drift:.2e} over T={T}')

    return GeodesicPath(
        samples=np.vstack([sol.y[: spec.n], heights]).T,
        params=params,
        arclength=True,
        length=abs(float(T)),
        speed_drift=drift,
    )


def distance(spec, p, q, mode=FULL):
    """
    Riemannian distance between GroupPoints.

    Energy minimization gives an upper bound; in full mode shooting refines
    it. See ``geodesic_solver.solve_normalized``.
    """
    return geodesic_solver.solve_distance(spec, p, q, mode=mode).value


def geodesic_between(spec, p, q, mode=FULL):
    """Polyline approximation of the geodesic from ``p`` to ``q``."""
    result = geodesic_solver.solve_distance(spec, p, q, mode=mode)
    points = geodesic_solver.denormalize(spec, p, result.waypoints)
    steps = np.array([
        geodesic_solver.polyline_length(spec, points[i:i + 2]) for i in range(len(points) - 1)
    ])
    return GeodesicPath(
        samples=points,
        params=np.concatenate([[0.0], np.cumsum(steps)]),
        arclength=True,
        length=result.value,
        diagnostics={'flagged': result.flagged, 'polyline_length': result.polyline_length},
    )


def hyperbolic_oracle_distance(alpha, n, p, q):
    """
    Exact distance for a single block (r = 1, eigenvalue ``alpha``).

    With y = e^(alpha t) and X = alpha x the metric is (dX^2 + dy^2) / (alpha y)^2,
    a rescaled upper half-space, so
        d = (2/alpha) asinh( sqrt(alpha^2 |dx|^2 + (y_p - y_q)^2) / (2 sqrt(y_p y_q)) ).
    """
    px = np.asarray(p.x, dtype=float)
    qx = np.asarray(q.x, dtype=float)
    if px.shape != (n,) or qx.shape != (n,):
        raise GeometryError(f'oracle points must have {n} horizontal coordinates')
    # Work with y_q / y_p to keep large heights finite
    ratio = math.exp(alpha * (q.t - p.t))
    scaled = alpha * float(np.linalg.norm(px - qx)) * math.exp(-alpha * p.t)
    chord = math.sqrt(scaled ** 2 + (1.0 - ratio) ** 2)
    return (2.0 / alpha) * math.asinh(chord / (2.0 * math.sqrt(ratio)))


def oracle_distance(spec, p, q):
    """``hyperbolic_oracle_distance`` for a single-block spectrum."""
    if spec.r != 1:
        raise MultiBlockSpectrum()
    return hyperbolic_oracle_distance(spec.alpha1, spec.n, p, q)


# =============================================================================
# BUSEMANN FUNCTIONS
# =============================================================================

def busemann_xi0(spec, base, p):
    """Busemann function of xi_0 normalized at ``base``: exactly t_base - t_p."""
    return base.t - p.t


def busemann_xi0_numeric(spec, base, p, T=20.0, mode=FULL):
    """d(gamma(T), p) - T along the upward vertical ray gamma from ``base``."""
    top = GroupPoint(base.x, base.t + T)
    return distance(spec, top, p, mode=mode) - T


def downward_ray(xi, base, s):
    """Point at parameter ``s`` on the downward vertical ray to ``xi`` started at base height."""
    return GroupPoint(xi, base.t - s)


def extrapolate_busemann(value, half, T, rate):
    """
    Two-point Richardson estimate of lim_s (d(ray(s), p) - s) from the values
    at ``T`` and ``T / 2``, for an error decaying like e^(-rate s).
    """
    q = math.exp(-rate * T / 2.0)
    return value - (half - value) * q / (1.0 - q)


def busemann_numeric(spec, xi, base, p, T=20.0, mode=FULL):
    """
    Busemann function of a boundary point ``xi`` of R^n at ``p``, along the
    downward vertical ray to ``xi`` started at height t_base.

    The error of d(ray(s), p) - s decays like e^(-2 alpha_1 s) (the leading
    term for one block); the values at T and T/2 are extrapolated at that rate.

    Returns:
        dict with ``value`` (extrapolated), ``raw`` = d(ray(T), p) - T,
        ``half`` = the same at T/2 and ``accuracy`` = |raw - half|. The value
        is accurate to the hyperbolicity scale only.
    """
    if T < 10:
        raise GeometryError(f'busemann_numeric needs T >= 10, got {T}')
    xi = np.asarray(xi.x if hasattr(xi, 'x') else xi, dtype=float)
    raw = distance(spec, downward_ray(xi, base, T), p, mode=mode) - T
    half = distance(spec, downward_ray(xi, base, T / 2.0), p, mode=mode) - T / 2.0
    value = extrapolate_busemann(raw, half, T, 2.0 * spec.alpha1)
    return {'value': value, 'raw': raw, 'half': half, 'accuracy': abs(raw - half)}


def hyperbolic_oracle_busemann(alpha, xi, base, p):
    """
    Closed-form Busemann function for r = 1 along the downward ray to ``xi``
    started at (xi, t_base):
        (1/alpha) ln( (alpha^2 |x - xi|^2 + e^(2 alpha t)) / (e^(alpha t) e^(alpha t_base)) ).
    """
    xi = np.asarray(xi, dtype=float)
    spread = alpha * float(np.linalg.norm(np.asarray(p.x, dtype=float) - xi))
    # Factor e^(2 alpha t) out of the numerator
    log_num = 2.0 * alpha * p.t + math.log1p((spread * math.exp(-alpha * p.t)) ** 2)
    return (log_num - alpha * p.t - alpha * base.t) / alpha


# =============================================================================
# QUASICENTERS AND DISTANCE ESTIMATES
# =============================================================================

def _distance_to_curve(spec, point, curve_at, lo, hi, mode=COARSE):
    """Minimize d(point, curve(s)) over s in [lo, hi]; convex along geodesics."""
    result = minimize_scalar(
        lambda s: distance(spec, point, curve_at(s), mode=mode),
        bounds=(lo, hi), method='bounded', options={'xatol': 1e-4},
    )
    return float(result.fun), float(result.x)


def boundary_geodesic(spec, p, q, mode=FULL):
    """
    Geodesic joining boundary points ``p`` and ``q`` of R^n, truncated on the
    vertical lines over p and q at BOUNDARY_DEPTH / alpha_1 below ln D_e(p, q).
    """
    depth = settings.SOLVGEOM['BOUNDARY_DEPTH'] / spec.alpha1
    t0 = float(de_height(spec, p, q))
    return geodesic_between(spec, GroupPoint(p, t0 - depth), GroupPoint(q, t0 - depth), mode=mode)


def quasicenter(spec, p, q, mode=COARSE):
    """
    Candidate quasicenter (p, ln D_e(p, q)) of the ideal triangle p, q, xi_0
    and its measured defect: the largest distance from the center to the
    sides gamma_p, gamma_q and the geodesic pq.

    The center lies on gamma_p, so that side contributes zero.
    """
    p = spec.conform(p)
    q = spec.conform(q)
    if np.array_equal(p, q):
        raise IdenticalPoints('a quasicenter needs two distinct boundary points')
    t0 = float(de_height(spec, p, q))
    center = GroupPoint(p, t0)
    reach = 4.0 / spec.alpha1 + 4.0

    to_gamma_q, _ = _distance_to_curve(
        spec, center, lambda s: GroupPoint(q, s), t0 - reach, t0 + reach, mode=mode)

    path = boundary_geodesic(spec, p, q, mode=mode)

    def on_path(s):
        return GroupPoint.from_array(_interpolate(path, s))

    to_pq, _ = _distance_to_curve(spec, center, on_path, 0.0, path.params[-1], mode=mode)
    sides = {'gamma_p': 0.0, 'gamma_q': to_gamma_q, 'geodesic_pq': to_pq}
    return {'center': center, 'defect': max(sides.values()), 'sides': sides, 't0': t0}


def _interpolate(path, s):
    return np.array([np.interp(s, path.params, column) for column in path.samples.T])


def g3_defect(spec, p, q, t1, t2, mode=FULL):
    """
    Compare d((p, t1), (q, t2)) with its height predictions.

    Below the quasicenter height t0 = ln D_e(p, q) (regime 1) the distance is
    (t0 - t1) + (t0 - t2) up to a constant; otherwise (regime 2) it lies in
    [|t1 - t2|, |t1 - t2| + 1].

    Returns:
        dict with ``regime``, ``distance`` and either ``defect`` (regime 1) or
        ``lower_slack`` / ``upper_slack`` (regime 2, both nonnegative when the
        sandwich holds)
    """
    p = spec.conform(p)
    q = spec.conform(q)
    if np.array_equal(p, q):
        raise IdenticalPoints()
    t0 = float(de_height(spec, p, q))
    d = distance(spec, GroupPoint(p, t1), GroupPoint(q, t2), mode=mode)
    if t1 < t0 and t2 < t0:
        return {'regime': 1, 't0': t0, 'distance': d, 'defect': d - (t0 - t1) - (t0 - t2)}
    gap = abs(t1 - t2)
    return {
        'regime': 2,
        't0': t0,
        'distance': d,
        'lower_slack': d - gap,
        'upper_slack': gap + 1.0 - d,
    }


def horizontal_curve_length(spec, vertices, t):
    """Length of a polyline lying in the horosphere R^n x {t}."""
    vertices = spec.conform(np.atleast_2d(vertices))
    steps = np.diff(vertices, axis=0)
    return float(np.sum(horospherical_distance(spec, steps, np.zeros(spec.n), t)))


def contraction_ratio(spec, vertices, t, s):
    """
    Length ratio of a horizontal curve pushed from height t to t + s toward
    xi_0, with the envelope [e^(-alpha_r s), e^(-alpha_1 s)] it must respect.
    """
    ratio = horizontal_curve_length(spec, vertices, t + s) / horizontal_curve_length(spec, vertices, t)
    return {
        'ratio': ratio,
        'lower': math.exp(-spec.alpha_r * s),
        'upper': math.exp(-spec.alpha1 * s),
    }


def pinching_check(spec, x, y, t, mode=FULL):
    """
    Horosphere against ambient distance for two points at height t:
    (2/a) sinh(a d / 2) <= d_H <= (2/b) sinh(b d / 2), a = alpha_1, b = alpha_r.

    Returns:
        dict with the distances and the signed slack of both inequalities
    """
    d = distance(spec, GroupPoint(x, t), GroupPoint(y, t), mode=mode)
    d_h = float(horospherical_distance(spec, x, y, t))
    lower = (2.0 / spec.alpha1) * math.sinh(spec.alpha1 * d / 2.0)
    upper = (2.0 / spec.alpha_r) * math.sinh(spec.alpha_r * d / 2.0)
    return {
        'distance': d,
        'horospherical': d_h,
        'lower_slack': d_h - lower,
        'upper_slack': upper - d_h,
    }
