from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exceptions import GeometryError

METRIC = 'metric'
QUASIMETRIC = 'quasimetric'


@dataclass(eq=False)
class SampledSpace:
    """
    A finite point set with a symmetric table of pairwise (quasi)distances.

    Instances are treated as immutable: every boundary construction returns a
    new space. ``meta`` carries construction diagnostics such as sandwich
    ratios.
    """

    labels: list
    dist: np.ndarray
    kind: str = QUASIMETRIC
    basepoint: Optional[str] = None
    coords: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = [str(label) for label in self.labels]
        self.dist = np.asarray(self.dist, dtype=float)
        size = len(self.labels)
        if self.dist.shape != (size, size):
            raise GeometryError(f'distance table shape {self.dist.shape} does not match {size} labels')
        if self.kind not in (METRIC, QUASIMETRIC):
            raise GeometryError(f'unknown space kind {self.kind!r}')
        if not np.allclose(self.dist, self.dist.T, rtol=1e-12, atol=0.0):
            raise GeometryError('distance table is not symmetric')
        if np.any(np.diag(self.dist) != 0.0):
            raise GeometryError('distance table has a non-zero diagonal')
        if np.any(self.dist < 0.0) or not np.all(np.isfinite(self.dist)):
            raise GeometryError('distances must be finite and non-negative')
        self.dist.setflags(write=False)

    @property
    def size(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise GeometryError(f'label {label!r} is not in the sample') from None

    def pairs(self):
        """Upper-triangle index arrays of all unordered pairs."""
        return np.triu_indices(self.size, k=1)

    def triangle_violation(self):
        """Largest d(i,k) - d(i,j) - d(j,k) over all triples."""
        d = self.dist
        worst = -np.inf
        for j in range(self.size):
            worst = max(worst, float(np.max(d - d[:, j, None] - d[None, j, :])))
        return worst

    def without(self, label):
        keep = [i for i in range(self.size) if i != self.index(label)]
        coords = None if self.coords is None else self.coords[keep]
        return SampledSpace(
            labels=[self.labels[i] for i in keep],
            dist=self.dist[np.ix_(keep, keep)],
            kind=self.kind,
            coords=coords,
        )


@dataclass(eq=False)
class VisualParams:
    """Boundary point seen from ``base`` with visual parameter ``epsilon``."""

    xi: object
    base: object
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise GeometryError('visual parameter epsilon must be positive')
