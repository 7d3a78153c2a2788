# solvgeom/services/geodesic_solver.py

# =============================================================================
# GEODESIC SOLVER
# =============================================================================
# Numerical geodesics of the left-invariant metric e^(-2tA) dx^2 + dt^2.
#
# The x-momenta P_k = e^(-2 a_k t) dx_k/ds are conserved along geodesics, so
# the flow reduces to
#     dx_k/ds = P_k e^(2 a_k t),   dt/ds = v,   dv/ds = -sum_k a_k P_k^2 e^(2 a_k t)
# where a_k is the eigenvalue of coordinate k.
#
# Distances are solved in a normalized frame: p is left-translated to the
# origin, so only q' = (e^(-t_p A)(x_q - x_p), t_q - t_p) remains.
# =============================================================================

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.conf import settings
from scipy.integrate import solve_ivp
from scipy.optimize import minimize, root

from ..exceptions import InvalidVelocity, NoConvergence, StepSizeUnderflow
from .spectrum_metrics import de_height

logger = logging.getLogger('solvgeom')

# Gauss-Legendre nodes on [0, 1] for exact-enough segment lengths
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS

FULL = 'full'
COARSE = 'coarse'
COARSE_WAYPOINTS = 64


@dataclass
class DistanceResult:
    """Outcome of a distance solve in the normalized frame."""

    spec: object
    value: float
    polyline_length: float
    shooting_length: Optional[float] = None
    flagged: bool = False
    # Waypoint rows (x, t) in the normalized frame, p at the origin
    waypoints: Optional[np.ndarray] = None
    # Conserved x-momentum of the unit-speed geodesic, when known
    momentum: Optional[np.ndarray] = None
    # dt/ds of the unit-speed geodesic at both ends
    vertical_speeds: Optional[tuple] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def top_height(self):
        """Highest height reached by the geodesic in the normalized frame."""
        end_height = float(self.waypoints[-1, -1])
        if self.momentum is not None and self.vertical_speeds is not None:
            v_start, v_end = self.vertical_speeds
            if v_start > 0 and v_end < 0:
                return turning_height(self.spec, self.momentum)
            return max(0.0, end_height)
        return float(np.max(self.waypoints[:, -1]))


def turning_height(spec, momentum):
    """
    Height where a unit-speed geodesic with x-momentum ``momentum`` turns:
    sum_k P_k^2 e^(2 a_k t) = 1, the D_e equation with t reflected.
    """
    return float(-de_height(spec, np.zeros(spec.n), momentum))


# =============================================================================
# GEODESIC FLOW
# =============================================================================

def _flow_rhs(spec, momentum):
    a = spec.coord_alphas
    n = spec.n
    weights = a * momentum ** 2

    def rhs(_, state):
        t, v = state[n], state[n + 1]
        growth = np.exp(2.0 * a * t)
        return np.concatenate([momentum * growth, [v, -np.sum(weights * growth)]])

    return rhs


def flow(spec, x0, t0, momentum, vt0, duration, t_eval=None, rtol=None, atol=None):
    """
    Integrate the geodesic flow from (x0, t0) with x-momentum ``momentum`` and
    vertical speed ``vt0`` for parameter time ``duration``.

    Returns:
        the solve_ivp solution; rows 0..n-1 are x, row n is t, row n+1 is dt/ds

    Raises:
        StepSizeUnderflow: the integrator stalled
    """
    conf = settings.SOLVGEOM
    state = np.concatenate([np.asarray(x0, dtype=float), [float(t0), float(vt0)]])
    sol = solve_ivp(
        _flow_rhs(spec, np.asarray(momentum, dtype=float)),
        (0.0, float(duration)),
        state,
        method='DOP853',
        t_eval=t_eval,
        rtol=conf['ODE_RTOL'] if rtol is None else rtol,
        atol=conf['ODE_ATOL'] if atol is None else atol,
    )
    if sol.status == -1:
        raise StepSizeUnderflow(f'geodesic integration stopped: {sol.message}')
    return sol


def speed_squared(spec, t, momentum, vt):
    """Squared Riemannian speed sum_k P_k^2 e^(2 a_k t) + v^2 (conserved)."""
    t = np.asarray(t, dtype=float)
    growth = np.exp(2.0 * spec.coord_alphas * t[..., None])
    return np.sum(momentum ** 2 * growth, axis=-1) + np.asarray(vt) ** 2


def velocity_to_momentum(spec, t, velocity):
    """Split a tangent vector (dx, dt) at height t into (momentum, dt)."""
    velocity = np.asarray(velocity, dtype=float)
    momentum = np.exp(-2.0 * spec.coord_alphas * t) * velocity[:-1]
    return momentum, float(velocity[-1])


def check_unit_velocity(spec, t, velocity, tol=1e-8):
    momentum, vt = velocity_to_momentum(spec, t, velocity)
    norm = float(np.sqrt(speed_squared(spec, t, momentum, vt)))
    if abs(norm - 1.0) > tol:
        raise InvalidVelocity(f'initial velocity has Riemannian norm {norm:.12g}, expected 1')
    return momentum, vt


# =============================================================================
# POLYLINES AND DISCRETE ENERGY
# =============================================================================

def polyline_length(spec, points):
    """
    Riemannian length of the polyline through ``points`` (rows (x, t)), with
    straight segments in coordinates. Each segment is integrated by
    8-point Gauss-Legendre, so the result bounds the distance from above.
    """
    points = np.asarray(points, dtype=float)
    dx = np.diff(points[:, :-1], axis=0)
    t = points[:, -1]
    dt = np.diff(t)
    heights = t[:-1, None] + _GL_NODES[None, :] * dt[:, None]
    weights = np.exp(-2.0 * spec.coord_alphas[None, None, :] * heights[:, :, None])
    integrand = np.sqrt(np.sum(weights * dx[:, None, :] ** 2, axis=-1) + dt[:, None] ** 2)
    return float(np.sum(integrand @ _GL_WEIGHTS))


def initial_path(spec, target_x, target_t, segments):
    """
    Up-across-down path from the origin to (target_x, target_t), crossing at
    height max(0, target_t, ln D_e(0, target_x)) where the horospherical
    distance is at most 1. Waypoints are spaced by arclength.
    """
    top = max(0.0, float(target_t), float(de_height(spec, np.zeros(spec.n), target_x)))
    across = float(np.sqrt(np.sum(np.exp(-2.0 * spec.coord_alphas * top) * target_x ** 2)))
    legs = np.array([top, across, top - float(target_t)])
    total = float(legs.sum())
    s = np.linspace(0.0, total, segments + 1)

    points = np.zeros((segments + 1, spec.n + 1))
    up = s <= legs[0]
    mid = (s > legs[0]) & (s <= legs[0] + legs[1])
    down = s > legs[0] + legs[1]

    points[up, -1] = s[up]
    frac = (s[mid] - legs[0]) / legs[1] if legs[1] > 0 else np.ones(mid.sum())
    points[mid, :-1] = frac[:, None] * target_x
    points[mid, -1] = top
    points[down, :-1] = target_x
    points[down, -1] = top - (s[down] - legs[0] - legs[1])
    points[-1, :-1] = target_x
    points[-1, -1] = target_t
    return points


def refine_path(points):
    """Double the waypoint count by inserting coordinate midpoints."""
    mids = 0.5 * (points[1:] + points[:-1])
    refined = np.empty((2 * len(points) - 1, points.shape[1]))
    refined[0::2] = points
    refined[1::2] = mids
    return refined


def minimize_energy(spec, points):
    """
    Minimize the discrete energy sum_j (sum_k w_jk dx_jk^2 + dt_j^2) over the
    interior waypoints, w_jk = e^(-2 a_k tbar_j) at segment midpoints.

    Interior x-coordinates are preconditioned as x_j = e^(A h_j) z_j with
    h_j the starting heights, so every variable lives on the same scale.
    """
    a = spec.coord_alphas
    n = spec.n
    start, end = points[0], points[-1]
    interior = points[1:-1]
    count = len(interior)
    if count == 0:
        return points
    scale = np.exp(a[None, :] * interior[:, -1:])
    segments = len(points) - 1
    normalizer = segments / max(polyline_length(spec, points), 1e-300) ** 2

    def unpack(v):
        z = v[: count * n].reshape(count, n)
        x = np.vstack([start[:-1], scale * z, end[:-1]])
        t = np.concatenate([[start[-1]], v[count * n:], [end[-1]]])
        return x, t

    def energy(v):
        x, t = unpack(v)
        dx = np.diff(x, axis=0)
        dt = np.diff(t)
        tbar = 0.5 * (t[1:] + t[:-1])
        w = np.exp(-2.0 * a[None, :] * tbar[:, None])
        wdx = w * dx
        value = np.sum(wdx * dx) + np.sum(dt ** 2)
        grad_x = 2.0 * (wdx[:-1] - wdx[1:])
        seg = np.sum(a[None, :] * wdx * dx, axis=1)
        grad_t = -(seg[:-1] + seg[1:]) + 2.0 * (dt[:-1] - dt[1:])
        grad = np.concatenate([(grad_x * scale).ravel(), grad_t])
        return normalizer * value, normalizer * grad

    v0 = np.concatenate([(interior[:, :-1] / scale).ravel(), interior[:, -1]])
    result = minimize(energy, v0, jac=True, method='L-BFGS-B',
                      options={'maxiter': 20000, 'ftol': 1e-15, 'gtol': 1e-11, 'maxcor': 30})
    x, t = unpack(result.x)
    logger.debug(f'energy minimization: {segments} segments, {result.nit} iterations, '
                 f'status {result.status}')
    return np.column_stack([x, t])


# =============================================================================
# SHOOTING
# =============================================================================

def _momentum_guess(spec, points):
    """Momentum and end speeds of the time-1 geodesic through ``points``."""
    a = spec.coord_alphas
    segments = len(points) - 1
    dx = np.diff(points[:, :-1], axis=0)
    t = points[:, -1]
    tbar = 0.5 * (t[1:] + t[:-1])
    per_segment = segments * np.exp(-2.0 * a[None, :] * tbar[:, None]) * dx
    momentum = np.median(per_segment, axis=0)
    length = polyline_length(spec, points)
    start_sq = length ** 2 - np.sum(momentum ** 2 * np.exp(2.0 * a * t[0]))
    end_sq = length ** 2 - np.sum(momentum ** 2 * np.exp(2.0 * a * t[-1]))
    v_start = np.sign(t[1] - t[0]) * np.sqrt(max(start_sq, 0.0))
    # Backward flow from the end runs against the path
    v_back = np.sign(t[-2] - t[-1]) * np.sqrt(max(end_sq, 0.0))
    return momentum, v_start, v_back


def shoot(spec, target_x, target_t, points):
    """
    Two-sided shooting from the origin and from (target_x, target_t), meeting
    at parameter 1/2 of a time-1 geodesic. Splitting the flow halves the
    exponential sensitivity of the endpoint to the initial data.

    Returns:
        (length, momentum of the unit-speed geodesic, (v_start, v_end)) or
        None when the root solve fails
    """
    a = spec.coord_alphas
    n = spec.n
    momentum0, v_start0, v_back0 = _momentum_guess(spec, points)
    pivot = float(np.max(points[:, -1]))
    unit = np.exp(-a * pivot)
    zero = np.zeros(n)
    scale = max(polyline_length(spec, points), 1e-12)

    def residual(u):
        momentum = u[:n] * unit
        try:
            fwd = flow(spec, zero, 0.0, momentum, u[n], 0.5).y[:, -1]
            bwd = flow(spec, target_x, target_t, -momentum, u[n + 1], 0.5).y[:, -1]
        except StepSizeUnderflow:
            return np.full(n + 2, 1e6)
        t_mid = 0.5 * (fwd[n] + bwd[n])
        res_x = np.exp(-a * t_mid) * (fwd[:n] - bwd[:n])
        return np.concatenate([res_x, [fwd[n] - bwd[n], (fwd[n + 1] + bwd[n + 1]) / scale]])

    u0 = np.concatenate([momentum0 / unit, [v_start0, v_back0]])
    try:
        sol = root(residual, u0, method='hybr', options={'xtol': 1e-13, 'maxfev': 400})
    except (ValueError, FloatingPointError) as exc:
        logger.debug(f'shooting aborted: {exc}')
        return None
    if not np.all(np.isfinite(sol.x)):
        return None
    error = float(np.max(np.abs(residual(sol.x))))
    if error > 1e-9 * max(1.0, scale):
        logger.debug(f'shooting residual {error:.3g} too large ({sol.message})')
        return None

    momentum = sol.x[:n] * unit
    length = float(np.sqrt(np.sum(momentum ** 2) + sol.x[n] ** 2))
    # Time-1 end velocity is the negated backward start
    return length, momentum / length, (sol.x[n] / length, -sol.x[n + 1] / length)


# =============================================================================
# DISTANCE
# =============================================================================

def normalize_pair(spec, p, q):
    """Left-translate p to the origin: returns e^(-t_p A)(x_q - x_p), t_q - t_p."""
    shift = np.exp(-spec.coord_alphas * p.t)
    return shift * (q.x - p.x), q.t - p.t


def solve_normalized(spec, target_x, target_t, mode=FULL):
    """
    Distance from the origin to (target_x, target_t).

    Discrete energy minimization runs on a doubling ladder of waypoint counts
    until the polyline length settles; in full mode two-sided shooting then
    refines the value. The result is the smaller of the two, and a relative
    disagreement above the configured threshold is flagged, not raised.

    Raises:
        NoConvergence: the polyline length is not finite
    """
    conf = settings.SOLVGEOM
    target_x = np.asarray(target_x, dtype=float)
    target_t = float(target_t)

    if not np.any(target_x):
        # Vertical geodesics realize the height bound
        points = np.array([np.append(np.zeros(spec.n), 0.0), np.append(target_x, target_t)])
        return DistanceResult(spec=spec, value=abs(target_t), polyline_length=abs(target_t), waypoints=points)

    segments = conf['MIN_WAYPOINTS']
    ceiling = min(conf['MAX_WAYPOINTS'], COARSE_WAYPOINTS) if mode == COARSE else conf['MAX_WAYPOINTS']
    points, length, ladder = energy_ladder(spec, initial_path(spec, target_x, target_t, segments), ceiling)

    result = DistanceResult(spec=spec, value=length, polyline_length=length, waypoints=points,
                            diagnostics={'ladder': ladder})
    result.momentum, v_start, v_end = _unit_momentum(spec, points)
    result.vertical_speeds = (v_start, v_end)

    if mode == FULL:
        shot = shoot(spec, target_x, target_t, points)
        if shot is None:
            result.flagged = True
            logger.warning(f'shooting did not converge; keeping polyline length {length:.10g}')
        else:
            result.shooting_length, result.momentum, result.vertical_speeds = shot
            gap = abs(result.shooting_length - length) / max(length, 1e-300)
            result.diagnostics['relative_gap'] = gap
            if gap > conf['DISAGREEMENT_FLAG']:
                result.flagged = True
                logger.warning(f'shooting {result.shooting_length:.10g} and energy '
                               f'{length:.10g} disagree (relative {gap:.2e})')
            result.value = min(result.shooting_length, length)
    return result


def energy_ladder(spec, points, ceiling):
    """
    Minimize and refine ``points`` until the polyline length changes by at
    most DISTANCE_TOL relative, or the waypoint count reaches ``ceiling``.

    Returns:
        (waypoints, length, [(segments, length), ...])

    Raises:
        NoConvergence: the polyline length is not finite
    """
    tol = settings.SOLVGEOM['DISTANCE_TOL']
    upper_bound = polyline_length(spec, points)
    previous = np.inf
    ladder = []
    while True:
        points = minimize_energy(spec, points)
        length = polyline_length(spec, points)
        ladder.append((len(points) - 1, length))
        if not np.isfinite(length):
            raise NoConvergence(f'polyline length diverged at {len(points) - 1} segments',
                                upper_bound=upper_bound)
        if abs(previous - length) <= tol * length or len(points) - 1 >= ceiling:
            return points, length, ladder
        previous = length
        points = refine_path(points)


def _unit_momentum(spec, points):
    momentum, v_start, v_back = _momentum_guess(spec, points)
    length = polyline_length(spec, points)
    return momentum / length, v_start / length, -v_back / length


def solve_distance(spec, p, q, mode=FULL):
    """Distance solve between GroupPoints ``p`` and ``q``."""
    target_x, target_t = normalize_pair(spec, p, q)
    return solve_normalized(spec, target_x, target_t, mode=mode)


def solve_in_place(spec, p, q):
    """
    Energy-ladder length between ``p`` and ``q`` minimized in their own
    coordinates. Only the starting path is built in the frame of ``p``;
    every minimization and length integral runs on the untranslated rows.

    Returns:
        (length, [(segments, length), ...])
    """
    conf = settings.SOLVGEOM
    target_x, target_t = normalize_pair(spec, p, q)
    if not np.any(target_x):
        return abs(target_t), []
    start = denormalize(spec, p, initial_path(spec, target_x, target_t, conf['MIN_WAYPOINTS']))
    _, length, ladder = energy_ladder(spec, start, conf['MAX_WAYPOINTS'])
    return length, ladder


def denormalize(spec, p, points):
    """Map normalized-frame rows back by the left translation by ``p``."""
    points = np.asarray(points, dtype=float)
    out = np.empty_like(points)
    out[:, :-1] = p.x + np.exp(spec.coord_alphas * p.t) * points[:, :-1]
    out[:, -1] = p.t + points[:, -1]
    return out
