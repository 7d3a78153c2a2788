from dataclasses import dataclass, field

import numpy as np

from ..exceptions import GeometryError


@dataclass(eq=False)
class CurveFamily:
    """
    Discretized curves in R^n together with the box the modulus grid covers.

    ``lengths`` holds the per-curve D-length at the refinement recorded in
    ``refinement``; the modulus service refreshes both for each grid.
    """

    curves: list
    box_lo: np.ndarray
    box_hi: np.ndarray
    horizontal: bool = False
    lengths: np.ndarray = None
    refinement: int = 1
    name: str = ''

    def __post_init__(self):
        self.curves = [np.atleast_2d(np.asarray(curve, dtype=float)) for curve in self.curves]
        for curve in self.curves:
            if len(curve) < 2:
                raise GeometryError('every curve needs at least two vertices')
        self.box_lo = np.asarray(self.box_lo, dtype=float)
        self.box_hi = np.asarray(self.box_hi, dtype=float)
        if self.lengths is None:
            self.lengths = np.full(len(self.curves), np.nan)

    @property
    def size(self):
        return len(self.curves)

    def extended(self, other):
        """Union of two families over the union of their boxes."""
        return CurveFamily(
            curves=self.curves + other.curves,
            box_lo=np.minimum(self.box_lo, other.box_lo),
            box_hi=np.maximum(self.box_hi, other.box_hi),
            horizontal=self.horizontal and other.horizontal,
            name=f'{self.name}+{other.name}',
        )


@dataclass(eq=False)
class GridDensity:
    """
    A nonnegative density on the cells of an axis-aligned grid. Cells have
    side R on block 1 and R^(alpha_i / alpha_1) on block i, so each is a
    D-ball of radius about R and its measure is R^Q.

    Only the cells some curve crosses are stored: ``cells`` lists their
    multi-indices and ``rho`` their values. Every other cell carries zero.
    """

    box_lo: np.ndarray
    box_hi: np.ndarray
    resolution: int
    cell_sides: np.ndarray
    shape: tuple
    cells: np.ndarray
    rho: np.ndarray
    Q: float
    cell_measure: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Q <= 1:
            raise GeometryError('modulus exponent Q must exceed 1')
        if np.any(self.rho < 0):
            raise GeometryError('density must be nonnegative')

    @property
    def energy(self):
        return float(np.sum(self.rho ** self.Q) * self.cell_measure)

    def cell_centers(self):
        return self.box_lo + (self.cells + 0.5) * self.cell_sides
