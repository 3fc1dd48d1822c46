"""Axis-aligned partition of the unit cube shared by cell estimators and bump markets."""

from __future__ import annotations

import numpy as np

__all__ = ["GridPartition"]


class GridPartition:
    """Tile [0,1]^d with G^d half-open boxes, G = ceil(1/requested side).

    The effective side 1/G is the largest side <= the requested one that tiles
    the cube exactly, so every context falls in exactly one box (the upper
    faces at coordinate 1 are closed). Box count M = ceil(1/h)^d.
    """

    def __init__(self, dim: int, side: float):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if not 0.0 < side <= 1.0:
            raise ValueError(f"grid side must lie in (0, 1], got {side}")
        self.dim = int(dim)
        self.requested_side = float(side)
        self.per_axis = int(np.ceil(1.0 / side - 1e-12))
        self.side = 1.0 / self.per_axis
        self.n_cells = self.per_axis**self.dim

    def cell_indices(self, points) -> np.ndarray:
        """Flat cell index for each row of an (n, d) array."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"points have dim {x.shape[1]}, grid has dim {self.dim}")
        axes = np.clip((x * self.per_axis).astype(np.int64), 0, self.per_axis - 1)
        flat = axes[:, 0]
        for a in range(1, self.dim):
            flat = flat * self.per_axis + axes[:, a]
        return flat

    def centers(self) -> np.ndarray:
        """(M, d) array of box centers, ordered by flat index."""
        one_axis = (np.arange(self.per_axis) + 0.5) * self.side
        mesh = np.meshgrid(*([one_axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def center_of(self, flat_index: int) -> np.ndarray:
        idx = []
        rem = int(flat_index)
        for _ in range(self.dim):
            idx.append(rem % self.per_axis)
            rem //= self.per_axis
        idx = np.array(idx[::-1])
        return (idx + 0.5) * self.side
