from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..exceptions import DimensionMismatch


@dataclass(frozen=True)
class Spectrum:
    """
    The diagonal matrix A as ordered blocks ``(n_i, alpha_i)``.

    A spectrum fixes the dimension n, the block count r and the Ahlfors
    exponent Q = sum(n_i * alpha_i / alpha_1) of the boundary. Build it
    through ``spectrum_metrics.build_spectrum`` so the block hypotheses are
    validated; the dataclass itself trusts its input.
    """

    # Ordered ``(dimension, eigenvalue)`` pairs, eigenvalues strictly increasing
    blocks: tuple

    @cached_property
    def dims(self):
        return np.array([dim for dim, _ in self.blocks], dtype=int)

    @cached_property
    def alphas(self):
        return np.array([alpha for _, alpha in self.blocks], dtype=float)

    @property
    def n(self):
        return int(self.dims.sum())

    @property
    def r(self):
        return len(self.blocks)

    @property
    def alpha1(self):
        return float(self.alphas[0])

    @property
    def alpha_r(self):
        return float(self.alphas[-1])

    @cached_property
    def Q(self):
        return float(np.sum(self.dims * self.alphas) / self.alphas[0])

    @cached_property
    def starts(self):
        """Index of the first coordinate of every block."""
        return np.concatenate(([0], np.cumsum(self.dims)[:-1])).astype(int)

    @cached_property
    def coord_alphas(self):
        """Eigenvalue attached to each of the n coordinates."""
        return np.repeat(self.alphas, self.dims)

    @cached_property
    def block_index(self):
        """Block number of each of the n coordinates."""
        return np.repeat(np.arange(self.r), self.dims)

    @property
    def label(self):
        return '+'.join(f'{dim}x{alpha:g}' for dim, alpha in self.blocks)

    def conform(self, x):
        """Return ``x`` as a float array whose last axis has length n."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.n:
            raise DimensionMismatch(
                f'expected vectors of length {self.n} for spectrum {self.label}, '
                f'got shape {arr.shape}'
            )
        return arr

    def split(self, x):
        """Split the last axis of ``x`` into its block components."""
        arr = self.conform(x)
        return np.split(arr, self.starts[1:], axis=-1)

    def as_config(self):
        return [{'dim': int(dim), 'alpha': float(alpha)} for dim, alpha in self.blocks]
