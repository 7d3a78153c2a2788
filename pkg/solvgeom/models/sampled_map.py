from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exceptions import GeometryError


@dataclass(eq=False)
class SampledMap:
    """A self-map of R^n known on a finite sample: ``image[i] = F(domain[i])``."""

    domain: np.ndarray
    image: np.ndarray
    injective: bool = True
    name: str = ''

    def __post_init__(self):
        self.domain = np.atleast_2d(np.asarray(self.domain, dtype=float))
        self.image = np.atleast_2d(np.asarray(self.image, dtype=float))
        if self.domain.shape != self.image.shape:
            raise GeometryError('domain and image samples must have equal shapes')
        if len(np.unique(self.domain, axis=0)) != len(self.domain):
            raise GeometryError('domain sample contains duplicate points')

    @property
    def size(self):
        return len(self.domain)

    def inverse(self):
        if not self.injective:
            raise GeometryError('a non-injective sampled map has no inverse')
        return SampledMap(self.image, self.domain, injective=True, name=f'{self.name}^-1')


@dataclass(eq=False)
class SampledGroupMap:
    """A self-map of G_A known on samples, rows ``(x_1..x_n, t)``."""

    domain: np.ndarray
    image: np.ndarray
    name: str = ''

    def __post_init__(self):
        self.domain = np.atleast_2d(np.asarray(self.domain, dtype=float))
        self.image = np.atleast_2d(np.asarray(self.image, dtype=float))
        if self.domain.shape != self.image.shape:
            raise GeometryError('domain and image samples must have equal shapes')


@dataclass(eq=False)
class DistortionProfile:
    """
    Measured ratio distortion of a sampled map.

    ``bin_max[k]`` is the largest output ratio seen for an input ratio in
    ``(edges[k], edges[k+1]]``; empty bins hold NaN. Profiles form a monoid
    under ``merge`` so sharded campaigns can combine them.
    """

    edges: np.ndarray
    bin_max: np.ndarray
    counts: np.ndarray
    k_plus: float = 0.0
    k_minus: float = np.inf
    clamped_low: int = 0
    clamped_high: int = 0
    degenerate: int = 0
    # (t, output ratio) of the triple with the largest output / t
    witness: Optional[tuple] = None
    notes: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, edges):
        bins = len(edges) - 1
        return cls(
            edges=np.asarray(edges, dtype=float),
            bin_max=np.full(bins, np.nan),
            counts=np.zeros(bins, dtype=int),
        )

    @property
    def envelope(self):
        """Monotone nondecreasing envelope of ``bin_max`` (empty bins inherit)."""
        filled = np.where(np.isnan(self.bin_max), -np.inf, self.bin_max)
        env = np.maximum.accumulate(filled)
        return np.where(np.isneginf(env), np.nan, env)

    def bin_of(self, t):
        idx = np.searchsorted(self.edges, t, side='left') - 1
        return int(np.clip(idx, 0, len(self.bin_max) - 1))

    def eta(self, t):
        """Envelope value at ratio ``t``."""
        return float(self.envelope[self.bin_of(t)])

    def merge(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise GeometryError('profiles with different bins cannot be merged')
        witnesses = [w for w in (self.witness, other.witness) if w is not None]
        witness = max(witnesses, key=lambda w: w[1] / w[0]) if witnesses else None
        return DistortionProfile(
            edges=self.edges,
            bin_max=np.fmax(self.bin_max, other.bin_max),
            counts=self.counts + other.counts,
            k_plus=max(self.k_plus, other.k_plus),
            k_minus=min(self.k_minus, other.k_minus),
            clamped_low=self.clamped_low + other.clamped_low,
            clamped_high=self.clamped_high + other.clamped_high,
            degenerate=self.degenerate + other.degenerate,
            witness=witness,
        )

    def as_dict(self):
        return {
            'edges': self.edges,
            'bin_max': np.where(np.isnan(self.bin_max), None, self.bin_max).tolist(),
            'envelope': np.where(np.isnan(self.envelope), None, self.envelope).tolist(),
            'counts': self.counts,
            'k_plus': self.k_plus,
            'k_minus': self.k_minus,
            'clamped_low': self.clamped_low,
            'clamped_high': self.clamped_high,
            'degenerate': self.degenerate,
            'witness': self.witness,
        }
