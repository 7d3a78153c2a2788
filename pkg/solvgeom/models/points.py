from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(eq=False)
class GroupPoint:
    """A point (x, t) of G_A: horospherical coordinate x and height t."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.t = float(self.t)

    def as_array(self):
        return np.append(self.x, self.t)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(arr[:-1], arr[-1])

    def __repr__(self):
        return f'GroupPoint(x={np.array2string(self.x, precision=6)}, t={self.t:.6g})'


@dataclass(eq=False)
class BoundaryPoint:
    """
    A point of the ideal boundary: either the distinguished point xi_0, shared
    end of all upward vertical geodesics, or a point of R^n.
    """

    x: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x is not None:
            self.x = np.atleast_1d(np.asarray(self.x, dtype=float))

    @property
    def is_xi0(self):
        return self.x is None

    @classmethod
    def xi0(cls):
        return cls(None)

    def same_as(self, other):
        if self.is_xi0 or other.is_xi0:
            return self.is_xi0 and other.is_xi0
        return bool(np.array_equal(self.x, other.x))

    def __repr__(self):
        if self.is_xi0:
            return 'BoundaryPoint(xi0)'
        return f'BoundaryPoint({np.array2string(self.x, precision=6)})'


@dataclass(eq=False)
class GeodesicPath:
    """Ordered samples of a geodesic, rows ``(x_1..x_n, t)``."""

    # Sample rows, shape (m, n + 1)
    samples: np.ndarray
    # Curve parameter of each sample
    params: np.ndarray
    # True when ``params`` is Riemannian arclength
    arclength: bool
    length: float
    # Largest deviation from unit speed seen by the integrator
    speed_drift: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def start(self):
        return GroupPoint.from_array(self.samples[0])

    @property
    def end(self):
        return GroupPoint.from_array(self.samples[-1])

    @property
    def heights(self):
        return self.samples[:, -1]
