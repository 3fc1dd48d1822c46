"""Market value functions m(x) on the unit cube and context distributions.

Markets carry smoothness metadata (Hölder order beta, constant, sup bound)
that the pricing policies treat as known problem constants. Certification
routines verify the declared constants by sampling, never by trusting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridPartition

__all__ = [
    "MarketError",
    "LinearMarket",
    "HolderMarket",
    "BumpMixture",
    "HolderReport",
    "holder_certify",
    "sup_bound_certify",
    "UniformContexts",
    "ScaledUniformContexts",
    "market_from_spec",
    "context_from_spec",
]


class MarketError(ValueError):
    """Invalid market or context specification."""


class Market:
    """Base: a map [0,1]^d -> R with smoothness metadata."""

    dim: int
    beta: float
    holder_constant: float
    sup_bound: float

    def value(self, x) -> float:
        v = self.value_batch(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(v[0])

    def value_batch(self, points) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, x: np.ndarray):
        if x.shape[1] != self.dim:
            raise MarketError(f"context dim {x.shape[1]} != market dim {self.dim}")


class LinearMarket(Market):
    """m(x) = x . phi with a declared norm bound ||phi|| <= B."""

    def __init__(self, phi, norm_bound: float):
        phi = np.asarray(phi, dtype=float)
        if phi.ndim != 1 or phi.size < 1:
            raise MarketError("phi must be a nonempty vector")
        norm = float(np.linalg.norm(phi))
        if norm > norm_bound * (1 + 1e-12):
            raise MarketError(f"||phi|| = {norm:g} exceeds declared bound {norm_bound:g}")
        self.phi = phi
        self.norm_bound = float(norm_bound)
        self.dim = phi.size
        self.beta = 1.0
        self.holder_constant = norm
        # Cauchy-Schwarz with ||x|| <= 1
        self.sup_bound = self.norm_bound

    def value_batch(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_dim(x)
        return x @ self.phi


class HolderMarket(Market):
    """A (beta, L_H)-Hölder function given as a closure, with certified metadata."""

    def __init__(self, fn, dim: int, beta: float, holder_constant: float,
                 sup_bound: float | None = None, name: str = "custom"):
        if beta <= 0:
            raise MarketError(f"beta must be positive, got {beta}")
        if holder_constant < 0:
            raise MarketError("holder_constant must be nonnegative")
        self._fn = fn
        self.dim = int(dim)
        self.beta = float(beta)
        self.holder_constant = float(holder_constant)
        self.name = name
        if sup_bound is None:
            sup_bound = sup_bound_certify(self)
        self.sup_bound = float(sup_bound)

    def value_batch(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_dim(x)
        return np.asarray(self._fn(x), dtype=float)


def _vee(length_scale: float):
    def fn(x):
        return length_scale * np.abs(x[:, 0] - 0.5)
    return fn


def _zigzag(length_scale: float, teeth: int):
    half = 1.0 / (2 * teeth)

    def fn(x):
        pos = np.mod(x[:, 0], 2 * half)
        return length_scale * (half - np.abs(pos - half))
    return fn


def holder_preset(name: str, holder_constant: float = 1.0, teeth: int = 2) -> HolderMarket:
    """Piecewise-linear 1-d test markets with exact slope = holder_constant."""
    if name == "vee":
        return HolderMarket(_vee(holder_constant), dim=1, beta=1.0,
                            holder_constant=holder_constant,
                            sup_bound=holder_constant / 2, name="vee")
    if name == "zigzag":
        if teeth < 1:
            raise MarketError("teeth must be >= 1")
        return HolderMarket(_zigzag(holder_constant, teeth), dim=1, beta=1.0,
                            holder_constant=holder_constant,
                            sup_bound=holder_constant / (2 * teeth), name=f"zigzag{teeth}")
    raise MarketError(f"unknown holder preset {name!r}; expected 'vee' or 'zigzag'")


class BumpMixture(Market):
    """Signed bumps on a grid: m(x) = theta_j * amplitude * psi_j(x) on cell j.

    The profile for beta <= 1 is
        psi(x) = max(0, 1 - ((2/h) ||x - c_j||_inf)^beta),
    which is 1 at the cell center and 0 on the cell boundary. Construction
    rejects amplitudes above L_H * h^beta. Note the *mixture's* certified
    Hölder constant is 2 * amplitude / h^beta (attained by adjacent
    opposite-sign centers), which exceeds the configured L_H whenever the
    amplitude exceeds L_H * h^beta / 2; ``certified_amplitude`` gives the
    largest amplitude for which the mixture itself is (beta, L_H)-Hölder.

    For beta > 1 a polynomial bump (1 - (2r/h)^2)^2 on the inscribed ball is
    used and the constant is certified numerically, not in closed form.
    """

    def __init__(self, dim: int, grid_side: float, amplitude: float, beta: float,
                 holder_constant: float, theta=None, theta_seed=None):
        if beta <= 0:
            raise MarketError(f"beta must be positive, got {beta}")
        self.grid = GridPartition(dim, grid_side)
        h = self.grid.side
        cap = holder_constant * h**beta
        if amplitude > cap * (1 + 1e-12):
            raise MarketError(
                f"amplitude {amplitude:g} exceeds L_H * h^beta = {cap:g}")
        if amplitude < 0:
            raise MarketError("amplitude must be nonnegative")
        m = self.grid.n_cells
        if theta is None:
            if theta_seed is None:
                raise MarketError("provide theta or theta_seed")
            rng = np.random.default_rng(theta_seed)
            theta = rng.choice([-1.0, 1.0], size=m)
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (m,) or not np.all(np.isin(theta, (-1.0, 1.0))):
            raise MarketError(f"theta must be a vector of +-1 with length {m}")
        self.theta = theta
        self.amplitude = float(amplitude)
        self.dim = int(dim)
        self.beta = float(beta)
        self.configured_holder_constant = float(holder_constant)
        self._centers = self.grid.centers()
        if beta <= 1.0:
            self.holder_constant = 2.0 * self.amplitude / h**beta
        else:
            self.holder_constant = float(holder_certify(
                self, n_pairs=20_000, seed=0, constant=np.inf, beta=beta).max_ratio)
        self.sup_bound = self.amplitude

    @staticmethod
    def certified_amplitude(holder_constant: float, grid_side: float, beta: float) -> float:
        """Largest amplitude keeping the mixture (beta, L_H)-Hölder: L_H h^beta / 2."""
        return holder_constant * grid_side**beta / 2.0

    def value_batch(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_dim(x)
        cells = self.grid.cell_indices(x)
        centers = self._centers[cells]
        h = self.grid.side
        if self.beta <= 1.0:
            r = np.max(np.abs(x - centers), axis=1)
            psi = np.maximum(0.0, 1.0 - ((2.0 / h) * r) ** self.beta)
        else:
            r2 = np.sum((x - centers) ** 2, axis=1)
            scaled = np.minimum(1.0, (4.0 / (h * h)) * r2)
            psi = (1.0 - scaled) ** 2
        return self.theta[cells] * self.amplitude * psi


@dataclass(frozen=True)
class HolderReport:
    beta: float
    constant: float
    max_ratio: float
    n_pairs: int
    passed: bool

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def holder_certify(market: Market, n_pairs: int, seed,
                   constant: float | None = None, beta: float | None = None) -> HolderReport:
    """Sampled two-point Hölder check: max |m(x)-m(x')| / ||x-x'||^beta.

    Passes iff the max ratio is <= constant * (1 + 1e-9). Defaults to the
    market's own declared beta and constant.
    """
    if n_pairs < 1:
        raise MarketError("n_pairs must be >= 1")
    beta = market.beta if beta is None else float(beta)
    constant = market.holder_constant if constant is None else float(constant)
    rng = np.random.default_rng(seed)
    x = rng.random((n_pairs, market.dim))
    y = rng.random((n_pairs, market.dim))
    dist = np.linalg.norm(x - y, axis=1)
    ok = dist > 0
    gap = np.abs(market.value_batch(x) - market.value_batch(y))[ok]
    ratio = gap / dist[ok] ** beta
    max_ratio = float(ratio.max(initial=0.0))
    return HolderReport(beta=beta, constant=constant, max_ratio=max_ratio,
                        n_pairs=n_pairs, passed=max_ratio <= constant * (1 + 1e-9))


def sup_bound_certify(market: Market, n_points: int = 2**14, seed: int = 0) -> float:
    """Numeric sup |m| over a grid (full mesh for d <= 2, Sobol above)."""
    d = market.dim
    if d <= 2:
        per_axis = int(round(n_points ** (1.0 / d)))
        axis = np.linspace(0.0, 1.0, per_axis)
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        from scipy.stats import qmc
        pts = qmc.Sobol(d, seed=seed).random(n_points)
    return float(np.max(np.abs(market.value_batch(pts))))


class ContextSampler:
    dim: int
    density_floor: float
    covariance: np.ndarray
    min_eigenvalue: float

    def sample(self, n: int, seed) -> np.ndarray:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return self._draw(rng, int(n))

    def _draw(self, rng, n):
        raise NotImplementedError

    def certify_eigenvalue(self) -> float:
        """Min eigenvalue of the analytic covariance, computed numerically."""
        return float(np.linalg.eigvalsh(self.covariance).min())


class UniformContexts(ContextSampler):
    """Uniform on [0,1]^d: density floor 1, Sigma = (1/12) I + (1/4) J."""

    def __init__(self, dim: int):
        if dim < 1:
            raise MarketError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.density_floor = 1.0
        self.covariance = np.eye(dim) / 12.0 + np.ones((dim, dim)) / 4.0
        self.min_eigenvalue = 1.0 / 12.0

    def _draw(self, rng, n):
        return rng.random((n, self.dim))


class ScaledUniformContexts(ContextSampler):
    """Uniform on [0,1]^d scaled by 1/sqrt(d) so ||x||_2 <= 1 almost surely.

    For the parametric setting: Sigma = ((1/12) I + (1/4) J) / d, so the
    minimum eigenvalue is 1/(12 d). The density (d^{d/2}) is supported on the
    subcube [0, 1/sqrt(d)]^d only, so this sampler is not meant for the
    density-floor (nonparametric) assumptions.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise MarketError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.density_floor = float(dim) ** (dim / 2.0)
        self.covariance = (np.eye(dim) / 12.0 + np.ones((dim, dim)) / 4.0) / dim
        self.min_eigenvalue = 1.0 / (12.0 * dim)

    def _draw(self, rng, n):
        return rng.random((n, self.dim)) / math.sqrt(self.dim)


_MARKET_KEYS = {
    "linear": {"phi", "norm_bound"},
    "holder": {"preset", "holder_constant", "teeth"},
    "bump_mixture": {"dim", "grid_side", "amplitude", "beta", "holder_constant",
                     "theta", "theta_seed"},
}


def market_from_spec(spec: dict) -> Market:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MarketError(f"market spec must be a mapping with a 'kind' key, got {spec!r}")
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in _MARKET_KEYS:
        raise MarketError(f"unknown market kind {kind!r}; expected one of {sorted(_MARKET_KEYS)}")
    unknown = set(spec) - _MARKET_KEYS[kind]
    if unknown:
        raise MarketError(f"unknown keys {sorted(unknown)} for market kind {kind!r}")
    if kind == "linear":
        return LinearMarket(**spec)
    if kind == "holder":
        return holder_preset(spec.pop("preset"), **spec)
    return BumpMixture(**spec)


def context_from_spec(spec: dict) -> ContextSampler:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MarketError(f"context spec must be a mapping with a 'kind' key, got {spec!r}")
    spec = dict(spec)
    kind = spec.pop("kind")
    kinds = {"uniform": UniformContexts, "scaled_uniform": ScaledUniformContexts}
    if kind not in kinds:
        raise MarketError(f"unknown context kind {kind!r}; expected one of {sorted(kinds)}")
    unknown = set(spec) - {"dim"}
    if unknown:
        raise MarketError(f"unknown keys {sorted(unknown)} for context kind {kind!r}")
    return kinds[kind](**spec)
