# solvgeom/utils/map_catalog.py

# =============================================================================
# CLOSED-FORM MAP CATALOG
# =============================================================================
# Named self-maps of the boundary R^n and of G_A used by the distortion
# campaigns. Each boundary entry carries its analytic quasisymmetry function
# when one is known; each group entry knows its boundary trace on the
# downward ends of vertical geodesics.
# =============================================================================

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..exceptions import GeometryError, SingleBlockSpectrum
from ..services.spectrum_metrics import block_dilation


@dataclass
class CatalogMap:
    """A vectorized map ``func(points) -> images`` with what is known about it."""

    name: str
    func: Callable
    # Closed-form eta with D-quasisymmetry constant, when known
    analytic_eta: Optional[Callable] = None
    preserves_leaves: bool = True
    injective: bool = True

    def __call__(self, points):
        return self.func(np.atleast_2d(np.asarray(points, dtype=float)))


# =============================================================================
# BOUNDARY MAPS
# =============================================================================

def identity(spec):
    return CatalogMap('identity', lambda x: x.copy(), analytic_eta=lambda t: t)


def similarity(spec, lam):
    """The D-similarity scaling D by ``lam``."""
    if not lam > 0:
        raise GeometryError(f'similarity factor must be positive, got {lam}')
    return CatalogMap(f'similarity({lam:g})', lambda x: block_dilation(spec, x, lam), analytic_eta=lambda t: t)


def shear(spec, L, exponent=None):
    """
    x_1 -> x_1 + L |y|^exponent e_1 with y the second block, exponent
    defaulting to alpha_1 / alpha_2. The default exponent commutes with the
    D-dilations, so the shear is bilipschitz with eta(t) = (1 + L)^2 t.
    """
    if spec.r < 2:
        raise SingleBlockSpectrum('a leaf shear needs a second block')
    exponent = spec.alphas[0] / spec.alphas[1] if exponent is None else float(exponent)
    start, stop = spec.starts[1], spec.starts[1] + spec.dims[1]

    def func(x):
        out = x.copy()
        out[:, 0] += L * np.linalg.norm(x[:, start:stop], axis=1) ** exponent
        return out

    eta = (lambda t: (1.0 + L) ** 2 * t) if math.isclose(exponent, spec.alphas[0] / spec.alphas[1]) else None
    return CatalogMap(f'shear({L:g},{exponent:g})', func, analytic_eta=eta)


def rotation(spec, theta):
    """
    Euclidean rotation by ``theta`` in the plane of the first coordinate of
    block 1 and the first coordinate of the last block. Mixes blocks, so it
    is not quasisymmetric for D.
    """
    if spec.r < 2:
        raise SingleBlockSpectrum('a block-mixing rotation needs a second block')
    i, j = 0, spec.starts[-1]
    c, s = math.cos(theta), math.sin(theta)

    def func(x):
        out = x.copy()
        out[:, i] = c * x[:, i] - s * x[:, j]
        out[:, j] = s * x[:, i] + c * x[:, j]
        return out

    return CatalogMap(f'rotation({theta:g})', func, preserves_leaves=False)


def block_affine(spec, factors, offset=None):
    """x_i -> factors_i x_i (+ offset); bilipschitz for D whenever all factors are nonzero."""
    factors = np.asarray(factors, dtype=float)
    if factors.shape != (spec.r,) or np.any(factors == 0):
        raise GeometryError(f'block_affine needs {spec.r} nonzero factors')
    per_coord = factors[spec.block_index]
    offset = np.zeros(spec.n) if offset is None else spec.conform(offset)
    return CatalogMap(f'block_affine({",".join(f"{f:g}" for f in factors)})', lambda x: x * per_coord + offset)


def translation(spec, v):
    v = spec.conform(v)
    return CatalogMap('translation', lambda x: x + v, analytic_eta=lambda t: t)


def compose(outer, inner):
    """``outer`` after ``inner``; analytic eta composes when both are known."""
    eta = None
    if outer.analytic_eta is not None and inner.analytic_eta is not None:
        eta = lambda t: outer.analytic_eta(inner.analytic_eta(t))  # noqa: E731
    return CatalogMap(
        f'{outer.name}*{inner.name}',
        lambda x: outer.func(inner.func(x)),
        analytic_eta=eta,
        preserves_leaves=outer.preserves_leaves and inner.preserves_leaves,
    )


BOUNDARY_MAPS = {
    'identity': identity,
    'similarity': similarity,
    'shear': shear,
    'rotation': rotation,
    'block_affine': block_affine,
    'translation': translation,
}


def boundary_map(spec, name, **params):
    try:
        factory = BOUNDARY_MAPS[name]
    except KeyError:
        raise GeometryError(f'unknown boundary map {name!r}; choose from {sorted(BOUNDARY_MAPS)}') from None
    return factory(spec, **params)


# =============================================================================
# GROUP MAPS
# =============================================================================
# Rows are (x_1..x_n, t). Every entry moves vertical geodesics to vertical
# geodesics, so its boundary trace is read off the x-part.

@dataclass
class CatalogGroupMap:
    name: str
    func: Callable
    trace: CatalogMap

    def __call__(self, rows):
        return self.func(np.atleast_2d(np.asarray(rows, dtype=float)))


def left_translation(spec, g):
    """Left multiplication by ``g``: (x, t) -> (x_g + e^(t_g A) x, t_g + t). An isometry."""
    scale = np.exp(spec.coord_alphas * g.t)

    def func(rows):
        out = rows.copy()
        out[:, :-1] = g.x + scale * rows[:, :-1]
        out[:, -1] = g.t + rows[:, -1]
        return out

    trace = CatalogMap('left_translation', lambda x: g.x + scale * x, analytic_eta=lambda t: t)
    return CatalogGroupMap(f'left_translation({g!r})', func, trace)


def block_dilation_group(spec, factors):
    """(x, t) -> (factors_i x_i, t); height-respecting, boundary trace block_affine."""
    trace = block_affine(spec, factors)

    def func(rows):
        out = rows.copy()
        out[:, :-1] = trace.func(rows[:, :-1])
        return out

    return CatalogGroupMap(f'block_dilation{tuple(float(f) for f in factors)}', func, trace)


def rotation_shift(spec, theta, shift):
    """(x, t) -> (R_theta x, t + shift) with the block-mixing rotation R_theta."""
    trace = rotation(spec, theta)

    def func(rows):
        out = rows.copy()
        out[:, :-1] = trace.func(rows[:, :-1])
        out[:, -1] = rows[:, -1] + shift
        return out

    return CatalogGroupMap(f'rotation_shift({theta:g},{shift:g})', func, trace)


GROUP_MAPS = {
    'left_translation': left_translation,
    'block_dilation': block_dilation_group,
    'rotation_shift': rotation_shift,
}


def group_map(spec, name, **params):
    try:
        factory = GROUP_MAPS[name]
    except KeyError:
        raise GeometryError(f'unknown group map {name!r}; choose from {sorted(GROUP_MAPS)}') from None
    return factory(spec, **params)
