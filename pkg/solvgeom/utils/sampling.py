# solvgeom/utils/sampling.py
# Seeded sample generation shared by the campaigns and the tests.
# Every campaign draws its full sample from one generator and a shard keeps
# the indices i with i % jobs == shard, so merged output does not depend on
# the number of shards.

import numpy as np

from ..models import GroupPoint


def make_rng(seed, stream=0):
    """Independent generator for ``(seed, stream)``; streams separate sub-samples."""
    return np.random.default_rng([int(seed), int(stream)])


def shard_indices(count, shard=0, jobs=1):
    """Indices of ``range(count)`` owned by ``shard`` out of ``jobs``."""
    return np.arange(count)[np.arange(count) % jobs == shard]


def adapted_box(spec, scale):
    """Per-coordinate half-widths of the D-ball of radius ``scale`` (block i gets scale^(alpha_i/alpha_1))."""
    return np.power(float(scale), spec.coord_alphas / spec.alpha1)


def boundary_points(spec, count, rng, scale=1.0, center=None):
    """``count`` points uniform in the D-adapted box of radius ``scale``."""
    half = adapted_box(spec, scale)
    points = rng.uniform(-1.0, 1.0, size=(count, spec.n)) * half
    if center is not None:
        points = points + spec.conform(center)
    return points


def boundary_grid(spec, per_axis, scale=1.0):
    """Regular D-adapted grid with ``per_axis`` nodes per coordinate."""
    half = adapted_box(spec, scale)
    axes = [np.linspace(-h, h, per_axis) for h in half]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, spec.n)


def leaf_points(spec, leaves, per_leaf, rng, scale=1.0):
    """
    ``per_leaf`` points on each of ``leaves`` random horizontal leaves
    R^(n_1) x {y}; rows are grouped leaf by leaf.
    """
    half = adapted_box(spec, scale)
    n1 = spec.dims[0]
    ys = rng.uniform(-1.0, 1.0, size=(leaves, spec.n - n1)) * half[n1:]
    xs = rng.uniform(-1.0, 1.0, size=(leaves, per_leaf, n1)) * half[:n1]
    ys = np.broadcast_to(ys[:, None, :], (leaves, per_leaf, spec.n - n1))
    return np.concatenate([xs, ys], axis=-1).reshape(-1, spec.n)


def group_points(spec, count, rng, box=1.0, heights=(-1.0, 1.0)):
    """Points of G_A with x uniform in [-box, box]^n and t uniform in ``heights``."""
    xs = rng.uniform(-box, box, size=(count, spec.n))
    ts = rng.uniform(heights[0], heights[1], size=count)
    return [GroupPoint(x, t) for x, t in zip(xs, ts)]


def pairs_with_de(spec, count, rng, log_range=(-5.0, 5.0)):
    """
    Boundary pairs (0, u) whose D_e distance is e^(t0) with t0 uniform in
    ``log_range``; u is a random unit vector dilated to height t0.

    Returns:
        (t0 array, u array of shape (count, n))
    """
    t0 = rng.uniform(log_range[0], log_range[1], size=count)
    directions = rng.normal(size=(count, spec.n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return t0, np.exp(spec.coord_alphas * t0[:, None]) * directions


def distinct_triples(size, count, rng):
    """``count`` random index triples with pairwise distinct entries."""
    triples = np.empty((0, 3), dtype=int)
    while len(triples) < count:
        batch = rng.integers(0, size, size=(2 * (count - len(triples)) + 8, 3))
        keep = (batch[:, 0] != batch[:, 1]) & (batch[:, 0] != batch[:, 2]) & (batch[:, 1] != batch[:, 2])
        triples = np.vstack([triples, batch[keep]])
    return triples[:count]
