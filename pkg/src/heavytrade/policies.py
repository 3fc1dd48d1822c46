"""Online pricing strategies behind one stateful interface.

All epoch-based policies share the doubling schedule: epoch k covers rounds
[2^(k-1), 2^k), clipped at the horizon, and the prices of epoch k depend only
on data observed strictly before it (epoch k >= 2 refits on exactly the rounds
of epoch k-1). Epoch 1 plays the fixed initial price 0.

The per-round interface is ``post_price(x)`` then ``receive_feedback(x, v, w)``
in strict alternation. Policies also expose block variants over epoch-aligned
slices; the harness drives those, and the equivalence of the two routes is
pinned by tests.
"""

from __future__ import annotations

import math

import numpy as np

from .estimators import TruncationConfig, fit_cells, fit_linear, fit_ols, EstimatorError
from .grid import GridPartition

__all__ = [
    "PolicyError",
    "EpochSchedule",
    "epoch_of",
    "theoretical_bandwidth",
    "Policy",
    "ParametricPolicy",
    "NonparametricPolicy",
    "OlsEpochPolicy",
    "OraclePolicy",
    "FixedPricePolicy",
    "policy_from_spec",
    "POLICY_KINDS",
]

INITIAL_PRICE = 0.0


class PolicyError(RuntimeError):
    """Protocol violation or invalid policy parameters."""


def epoch_of(t: int, horizon: int) -> int:
    """Index k with 2^(k-1) <= t < 2^k; rounds are 1-based."""
    if not 1 <= t <= horizon:
        raise PolicyError(f"round {t} outside [1, {horizon}]")
    return int(t).bit_length()


class EpochSchedule:
    """Doubling epochs partitioning rounds 1..T; the last epoch is clipped at T."""

    def __init__(self, horizon: int):
        if horizon < 2:
            raise PolicyError(f"horizon must be >= 2, got {horizon}")
        self.horizon = int(horizon)
        self.n_epochs = int(horizon).bit_length()

    def span(self, k: int) -> tuple[int, int]:
        """Half-open round range [start, end) of epoch k."""
        if not 1 <= k <= self.n_epochs:
            raise PolicyError(f"epoch {k} outside [1, {self.n_epochs}]")
        return 2 ** (k - 1), min(2**k, self.horizon + 1)

    def spans(self):
        return [self.span(k) for k in range(1, self.n_epochs + 1)]


def theoretical_bandwidth(p: float, beta: float, d: int, horizon: int) -> float:
    """Bias/estimation balancing cell side: T^(-(p-1)/(beta*p + d*(p-1)))."""
    if not 1.0 < p <= 2.0:
        raise PolicyError(f"p must lie in (1, 2], got {p}")
    if beta <= 0:
        raise PolicyError(f"beta must be positive, got {beta}")
    if d < 1:
        raise PolicyError(f"d must be >= 1, got {d}")
    if horizon < 2:
        raise PolicyError(f"horizon must be >= 2, got {horizon}")
    exponent = (p - 1.0) / (beta * p + d * (p - 1.0))
    return float(horizon) ** (-exponent)


class Policy:
    """Stateful pricing strategy over a fixed horizon.

    Subclasses implement ``_prices_for(X)`` (pure function of the current
    state) and may override ``_epoch_completed(X, Y)`` to refit.
    """

    kind = "abstract"

    def __init__(self, horizon: int, name: str | None = None):
        self.schedule = EpochSchedule(horizon)
        self.horizon = int(horizon)
        self.name = name or self.kind
        self._next_price_t = 1
        self._next_feedback_t = 1
        self._buffer_x: list[np.ndarray] = []
        self._buffer_y: list[np.ndarray] = []
        self.diagnostics: list[dict] = []

    # -- per-round interface ---------------------------------------------------------

    def post_price(self, x) -> float:
        return float(self.price_block(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def receive_feedback(self, x, v: float, w: float) -> None:
        self.feedback_block(np.atleast_2d(np.asarray(x, dtype=float)),
                            np.atleast_1d(float(v)), np.atleast_1d(float(w)))

    # -- block interface ---------------------------------------------------------------

    def price_block(self, contexts) -> np.ndarray:
        x = np.atleast_2d(np.asarray(contexts, dtype=float))
        n = x.shape[0]
        t = self._next_price_t
        if t != self._next_feedback_t:
            raise PolicyError("post_price called before feedback for earlier rounds")
        if t + n - 1 > self.horizon:
            raise PolicyError(f"pricing past the horizon {self.horizon}")
        if n > 0 and epoch_of(t, self.horizon) != epoch_of(t + n - 1, self.horizon):
            raise PolicyError("price block crosses an epoch boundary")
        prices = self._prices_for(x)
        self._next_price_t = t + n
        return prices

    def feedback_block(self, contexts, v, w) -> None:
        x = np.atleast_2d(np.asarray(contexts, dtype=float))
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        n = x.shape[0]
        t = self._next_feedback_t
        if t + n != self._next_price_t:
            raise PolicyError("feedback must cover exactly the rounds already priced")
        y = 0.5 * (v + w)
        self._buffer_x.append(x)
        self._buffer_y.append(y)
        self._next_feedback_t = t + n
        k = epoch_of(self._next_feedback_t - 1, self.horizon)
        _, end = self.schedule.span(k)
        if self._next_feedback_t == end:
            bx = np.concatenate(self._buffer_x, axis=0)
            by = np.concatenate(self._buffer_y)
            self._buffer_x.clear()
            self._buffer_y.clear()
            self._epoch_completed(bx, by, k)

    @property
    def buffered_rounds(self) -> int:
        return int(sum(b.size for b in self._buffer_y))

    # -- strategy hooks ---------------------------------------------------------------

    def _prices_for(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _epoch_completed(self, x: np.ndarray, y: np.ndarray, k: int) -> None:
        pass


class ParametricPolicy(Policy):
    """Truncated-score linear pricing: P_t = x . phi_hat of the previous epoch.

    u = (B + sigma_p)^p bounds the raw p-th moment of every score coordinate;
    the confidence factor is log(d * T). Epochs whose Gram matrix fails the
    eigenvalue floor keep the previous estimate (price 0 until a fit succeeds).
    """

    kind = "parametric"

    def __init__(self, horizon: int, dim: int, p: float, sigma_p: float,
                 norm_bound: float, eigen_floor: float, name: str | None = None):
        super().__init__(horizon, name)
        if dim < 1:
            raise PolicyError(f"dim must be >= 1, got {dim}")
        if eigen_floor <= 0:
            raise PolicyError(f"eigen_floor must be positive, got {eigen_floor}")
        self.dim = int(dim)
        self.eigen_floor = float(eigen_floor)
        self.config = TruncationConfig(u=(norm_bound + sigma_p) ** p, moment_order=p,
                                       log_term=math.log(dim * horizon))
        self.estimate: np.ndarray | None = None
        self.last_fit = None

    def _prices_for(self, x):
        if self.estimate is None:
            return np.full(x.shape[0], INITIAL_PRICE)
        return x @ self.estimate

    def _epoch_completed(self, x, y, k):
        fit = fit_linear(x, y, self.config, self.eigen_floor)
        self.last_fit = fit
        self.diagnostics.append({
            "epoch": k, "n": fit.n, "ok": fit.ok, "tau": fit.tau,
            "min_eigenvalue": fit.min_eigenvalue,
            "truncation_fraction": fit.truncation_fraction.tolist(),
        })
        if fit.ok:
            self.estimate = fit.phi


class NonparametricPolicy(Policy):
    """Per-cell truncated-mean pricing on a fixed tiling of [0,1]^d.

    The cell side comes from the balancing formula ("theory" mode) or is given
    explicitly; u = (B_m + sigma_p)^p and the confidence factor is log(M * T).
    Cells empty in the previous epoch price 0.
    """

    kind = "nonparametric"

    def __init__(self, horizon: int, dim: int, p: float, sigma_p: float,
                 sup_bound: float, bandwidth, beta: float | None = None,
                 name: str | None = None):
        super().__init__(horizon, name)
        if bandwidth == "theory":
            if beta is None:
                raise PolicyError("theory bandwidth needs beta")
            bandwidth = theoretical_bandwidth(p, beta, dim, horizon)
        if not 0.0 < bandwidth <= 1.0:
            raise PolicyError(f"bandwidth must lie in (0, 1], got {bandwidth}")
        self.grid = GridPartition(dim, float(bandwidth))
        self.dim = int(dim)
        self.bandwidth = float(bandwidth)
        self.config = TruncationConfig(u=(sup_bound + sigma_p) ** p, moment_order=p,
                                       log_term=math.log(self.grid.n_cells * horizon))
        self.estimate = None

    def _prices_for(self, x):
        if self.estimate is None:
            return np.full(x.shape[0], INITIAL_PRICE)
        return self.estimate.prices(self.grid.cell_indices(x))

    def _epoch_completed(self, x, y, k):
        est = fit_cells(x, y, self.grid.requested_side, self.config, dim=self.dim)
        self.estimate = est
        occupied = est.counts[est.counts > 0]
        self.diagnostics.append({
            "epoch": k, "n": int(y.size), "cells": est.n_cells,
            "empty_cells": int(est.empty.sum()),
            "min_cell_count": int(occupied.min()) if occupied.size else 0,
            "max_cell_count": int(est.counts.max()),
            "mean_truncation_fraction":
                float(np.nanmean(est.truncation_fraction)) if occupied.size else 0.0,
        })


class OlsEpochPolicy(Policy):
    """Epoch pricing with the ordinary-least-squares baseline estimator."""

    kind = "ols_epoch"

    def __init__(self, horizon: int, dim: int, name: str | None = None):
        super().__init__(horizon, name)
        self.dim = int(dim)
        self.estimate: np.ndarray | None = None

    def _prices_for(self, x):
        if self.estimate is None:
            return np.full(x.shape[0], INITIAL_PRICE)
        return x @ self.estimate

    def _epoch_completed(self, x, y, k):
        try:
            self.estimate = fit_ols(x, y)
            self.diagnostics.append({"epoch": k, "n": int(y.size), "ok": True})
        except EstimatorError:
            # singular epoch: keep the previous estimate
            self.diagnostics.append({"epoch": k, "n": int(y.size), "ok": False})


class OraclePolicy(Policy):
    """Prices at the true market value; zero analytic regret every round."""

    kind = "oracle"

    def __init__(self, horizon: int, market, name: str | None = None):
        super().__init__(horizon, name)
        self.market = market

    def _prices_for(self, x):
        return np.asarray(self.market.value_batch(x), dtype=float)


class FixedPricePolicy(Policy):
    kind = "fixed"

    def __init__(self, horizon: int, price: float = 0.0, name: str | None = None):
        super().__init__(horizon, name)
        if not math.isfinite(price):
            raise PolicyError(f"fixed price must be finite, got {price}")
        self.price = float(price)

    def _prices_for(self, x):
        return np.full(x.shape[0], self.price)


POLICY_KINDS = {
    "parametric": {"name", "p", "sigma_p", "norm_bound", "eigen_floor"},
    "nonparametric": {"name", "p", "sigma_p", "sup_bound", "bandwidth", "beta"},
    "ols_epoch": {"name"},
    "oracle": {"name"},
    "fixed": {"name", "price"},
}


def validate_policy_spec(spec: dict) -> None:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise PolicyError(f"policy spec must be a mapping with a 'kind' key, got {spec!r}")
    kind = spec["kind"]
    if kind not in POLICY_KINDS:
        raise PolicyError(f"unknown policy kind {kind!r}; expected one of {sorted(POLICY_KINDS)}")
    unknown = set(spec) - POLICY_KINDS[kind] - {"kind"}
    if unknown:
        raise PolicyError(f"unknown keys {sorted(unknown)} for policy kind {kind!r}")


def policy_from_spec(spec: dict, horizon: int, market, context, p: float,
                     sigma_p: float) -> Policy:
    """Build a policy, defaulting hyperparameters from the problem constants.

    ``p`` and ``sigma_p`` are the constants certified for the noise pair
    (smallest moment order, largest moment bound); markets supply their norm or
    sup bounds and smoothness; eigen_floor "auto" resolves to half the context
    covariance's minimum eigenvalue.
    """
    validate_policy_spec(spec)
    spec = dict(spec)
    kind = spec.pop("kind")
    name = spec.pop("name", None)
    if kind == "oracle":
        return OraclePolicy(horizon, market, name=name)
    if kind == "fixed":
        return FixedPricePolicy(horizon, price=spec.pop("price", 0.0), name=name)
    if kind == "ols_epoch":
        return OlsEpochPolicy(horizon, dim=market.dim, name=name)
    p = float(spec.pop("p", p))
    sigma_p = float(spec.pop("sigma_p", sigma_p))
    if kind == "parametric":
        norm_bound = float(spec.pop("norm_bound", getattr(market, "norm_bound", None)
                                    or market.sup_bound))
        floor = spec.pop("eigen_floor", "auto")
        if floor == "auto":
            floor = context.min_eigenvalue / 2.0 if context is not None else 1e-6
        return ParametricPolicy(horizon, dim=market.dim, p=p, sigma_p=sigma_p,
                                norm_bound=norm_bound, eigen_floor=float(floor), name=name)
    sup_bound = float(spec.pop("sup_bound", market.sup_bound))
    beta = spec.pop("beta", getattr(market, "beta", None))
    return NonparametricPolicy(horizon, dim=market.dim, p=p, sigma_p=sigma_p,
                               sup_bound=sup_bound,
                               bandwidth=spec.pop("bandwidth", "theory"),
                               beta=beta, name=name)
