"""Robust mean estimation: truncated means, truncated score-vector linear fits,
per-cell truncated means, and an OLS baseline.

The truncation threshold follows the standard heavy-tail recipe: given a raw
moment bound u >= E|Y|^p and a confidence log-factor,

    tau = (u * n / log_term)^(1/p),

samples beyond tau are zeroed but still count in the denominator. Under a
finite p-th moment this estimator deviates by O(u^{1/p} (log_term/n)^{(p-1)/p}),
which beats the empirical mean's polynomial tails whenever p < 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .grid import GridPartition

__all__ = [
    "EstimatorError",
    "TruncationConfig",
    "LinearFit",
    "CellEstimates",
    "truncated_mean",
    "fit_linear",
    "fit_cells",
    "fit_ols",
    "MATRIX_HOEFFDING_C1",
    "CHERNOFF_C1",
]

# Concentration constants never pinned down by the theory; engineering defaults,
# overridable through the experiment config (constants section).
MATRIX_HOEFFDING_C1 = 4.0
CHERNOFF_C1 = 8.0


class EstimatorError(ValueError):
    """Invalid estimator input."""


@dataclass(frozen=True)
class TruncationConfig:
    """Raw p-th moment bound u, moment order p, and confidence log-factor."""

    u: float
    moment_order: float
    log_term: float

    def __post_init__(self):
        if not self.u > 0:
            raise EstimatorError(f"u must be positive, got {self.u}")
        if not 1.0 < self.moment_order <= 2.0:
            raise EstimatorError(f"moment_order must lie in (1, 2], got {self.moment_order}")
        if not self.log_term > 0:
            raise EstimatorError(f"log_term must be positive, got {self.log_term}")

    def tau(self, n: int) -> float:
        """Truncation threshold for a sample of size n."""
        return (self.u * n / self.log_term) ** (1.0 / self.moment_order)


def truncated_mean(samples, cfg: TruncationConfig, n_declared: int | None = None) -> float:
    """(1/n) sum of samples zeroed beyond tau(n); zeroed samples stay in n."""
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise EstimatorError("samples must be a nonempty 1-d sequence")
    if n_declared is not None and n_declared != y.size:
        raise EstimatorError(f"declared n={n_declared} but got {y.size} samples")
    mean, _ = kernels.truncated_mean_given_tau(y, cfg.tau(y.size))
    return float(mean)


@dataclass(frozen=True)
class LinearFit:
    """Truncated-score estimate phi = Gram^{-1} mu, or a fallback flag.

    ``ok`` is False when the empirical Gram matrix fails the eigenvalue floor;
    the caller (epoch policy) then keeps its previous estimate.
    """

    phi: np.ndarray | None
    gram: np.ndarray
    mu: np.ndarray
    min_eigenvalue: float
    truncation_fraction: np.ndarray
    n: int
    tau: float

    @property
    def ok(self) -> bool:
        return self.phi is not None


def fit_linear(contexts, responses, cfg: TruncationConfig, eigen_floor: float) -> LinearFit:
    """Coordinate-wise truncated means of score vectors x_s * y_s, then Gram solve.

    The shared threshold tau = (u n / log_term)^{1/p} applies to every
    coordinate. If min-eig(Gram) < eigen_floor, no estimate is produced.
    """
    x = np.atleast_2d(np.asarray(contexts, dtype=float))
    y = np.asarray(responses, dtype=float)
    if x.shape[0] != y.size or y.size < 1:
        raise EstimatorError(f"need equal nonzero lengths, got {x.shape[0]} contexts, "
                             f"{y.size} responses")
    n = y.size
    tau = cfg.tau(n)
    mu, kept = kernels.score_truncated_means(x, y, tau)
    gram = (x.T @ x) / n
    min_eig = float(np.linalg.eigvalsh(gram).min())
    phi = None
    if min_eig >= eigen_floor:
        phi = np.linalg.solve(gram, mu)
    return LinearFit(phi=phi, gram=gram, mu=np.asarray(mu),
                     min_eigenvalue=min_eig,
                     truncation_fraction=1.0 - np.asarray(kept) / n,
                     n=n, tau=float(tau))


@dataclass(frozen=True)
class CellEstimates:
    """Per-cell truncated means over a half-open tiling of [0,1]^d.

    Empty cells carry estimate NaN and are flagged; the nonparametric policy
    substitutes price 0 for them.
    """

    grid: GridPartition
    estimates: np.ndarray
    counts: np.ndarray
    truncation_fraction: np.ndarray
    log_term: float

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def prices(self, cells) -> np.ndarray:
        """Estimate per flat cell index, price 0 where the cell was empty."""
        est = np.where(self.empty, 0.0, np.nan_to_num(self.estimates))
        return est[cells]


def fit_cells(contexts, responses, grid_side: float, cfg: TruncationConfig,
              dim: int | None = None) -> CellEstimates:
    """Truncated mean per cell, with tau from each cell's own realized count."""
    x = np.atleast_2d(np.asarray(contexts, dtype=float))
    y = np.asarray(responses, dtype=float)
    if x.shape[0] != y.size:
        raise EstimatorError("contexts and responses must have equal length")
    grid = GridPartition(x.shape[1] if dim is None else dim, grid_side)
    cells = grid.cell_indices(x)
    counts, sums, kept = kernels.cell_truncated_stats(
        cells, y, grid.n_cells, cfg.u, cfg.moment_order, cfg.log_term)
    counts = np.asarray(counts)
    with np.errstate(invalid="ignore", divide="ignore"):
        estimates = np.where(counts > 0, np.asarray(sums) / counts, np.nan)
        frac = np.where(counts > 0, 1.0 - np.asarray(kept) / counts, np.nan)
    return CellEstimates(grid=grid, estimates=estimates, counts=counts,
                         truncation_fraction=frac, log_term=cfg.log_term)


def fit_ols(contexts, responses) -> np.ndarray:
    """Ordinary least squares on the normal equations; raises on singular Gram."""
    x = np.atleast_2d(np.asarray(contexts, dtype=float))
    y = np.asarray(responses, dtype=float)
    if x.shape[0] != y.size or y.size < 1:
        raise EstimatorError("need equal nonzero lengths")
    gram = x.T @ x
    d = gram.shape[0]
    eigs = np.linalg.eigvalsh(gram)
    if eigs.min() <= max(1e-12 * max(eigs.max(), 1.0), 0.0):
        raise EstimatorError(f"singular Gram matrix (min eigenvalue {eigs.min():.3g})")
    return np.linalg.solve(gram, x.T @ y)
