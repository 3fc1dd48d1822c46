"""Zero-mean noise models with bounded densities and certified heavy-tail moments.

Every model declares three constants the pricing algorithms rely on:

* ``density_bound`` -- an upper bound L on the density (sup f <= L),
* ``moment_order``  -- the certified moment order p in (1, 2],
* ``sigma_p``       -- a bound on the p-th moment, (E|xi|^p)^(1/p) <= sigma_p.

Declared values are verified numerically by :meth:`NoiseModel.certify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

__all__ = [
    "NoiseError",
    "DivergentMomentError",
    "CertificationReport",
    "NoiseModel",
    "GaussianNoise",
    "UniformNoise",
    "StudentTNoise",
    "SmoothedTwoPoint",
    "noise_from_spec",
]

# Family codes shared with the kernel backends (see _kernels_py.py).
PROFILE_GAUSSIAN = 0
PROFILE_UNIFORM = 1
PROFILE_STUDENT_T = 2
PROFILE_PIECEWISE = 3

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=400)


class NoiseError(ValueError):
    """Invalid noise-model parameters."""


class DivergentMomentError(NoiseError):
    """Requested moment order at or above the tail index; the moment is infinite."""


@dataclass(frozen=True)
class CertificationReport:
    """Numeric verification of a model's declared (L, p, sigma_p) constants."""

    kind: str
    mean: float
    normalization: float
    density_sup_grid: float
    density_sup_analytic: float
    declared_density_bound: float
    moment_order: float
    pth_moment: float
    declared_sigma_p: float
    mean_ok: bool
    normalization_ok: bool
    density_ok: bool
    moment_ok: bool

    @property
    def ok(self) -> bool:
        return self.mean_ok and self.normalization_ok and self.density_ok and self.moment_ok

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["ok"] = self.ok
        return d


class NoiseModel:
    """Base class: a scalar noise distribution with exact density and cdf.

    Subclasses provide vectorized ``density``/``cdf``, seeded sampling, the
    exact upper partial moment  int_x^inf t f(t) dt  (used by the closed-form
    regret kernels), and a kernel profile encoding.
    """

    kind: str = "abstract"

    def __init__(self, density_bound: float, moment_order: float, sigma_p: float | None):
        if not np.isfinite(density_bound) or density_bound <= 0:
            raise NoiseError(f"density_bound must be positive and finite, got {density_bound}")
        if not (1.0 < moment_order <= 2.0):
            raise NoiseError(f"moment_order must lie in (1, 2], got {moment_order}")
        self.density_bound = float(density_bound)
        self.moment_order = float(moment_order)
        if sigma_p is None:
            sigma_p = self.pth_moment(self.moment_order) ** (1.0 / self.moment_order)
        if sigma_p < 0:
            raise NoiseError(f"sigma_p must be nonnegative, got {sigma_p}")
        self.sigma_p = float(sigma_p)

    # -- exact analytic quantities -------------------------------------------------

    def density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def density_sup(self) -> float:
        """Exact supremum of the density."""
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Interval outside which the density vanishes (may be infinite)."""
        return (-math.inf, math.inf)

    def density_breakpoints(self) -> np.ndarray:
        """Discontinuity locations, passed to adaptive quadrature as split points."""
        return np.array([])

    def upper_partial_moment(self, x: float) -> float:
        """Exact  int_x^inf t f(t) dt ."""
        raise NotImplementedError

    def mean_abs(self) -> float:
        """E|xi| for a zero-mean model equals twice the upper partial moment at 0."""
        return 2.0 * self.upper_partial_moment(0.0) - self.mean()

    def profile(self) -> tuple[int, np.ndarray]:
        """(family code, parameter vector) consumed by the kernel backends."""
        raise NotImplementedError

    # -- sampling ------------------------------------------------------------------

    def sample(self, n: int, seed) -> np.ndarray:
        """n i.i.d. draws, deterministic per seed (int or numpy Generator)."""
        if n < 0:
            raise NoiseError(f"sample size must be >= 0, got {n}")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return self._draw(rng, int(n))

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    # -- numeric moments and certification ------------------------------------------

    def pth_moment(self, p: float) -> float:
        """E|xi|^p by quadrature over the support."""
        if p <= 0:
            raise NoiseError(f"moment order must be positive, got {p}")
        lo, hi = self.support()
        val, _ = integrate.quad(lambda x: np.abs(x) ** p * self.density(x), lo, hi,
                                points=self._quad_points(), **_QUAD_OPTS)
        return float(val)

    def _quad_points(self):
        lo, hi = self.support()
        if math.isinf(lo) or math.isinf(hi):
            return None
        return [0.0] if lo < 0.0 < hi else None

    def _certification_grid(self, n: int = 10_000) -> np.ndarray:
        lo, hi = self.support()
        if math.isinf(lo) or math.isinf(hi):
            lo, hi = self._central_quantile_range(1e-5)
        return np.linspace(lo, hi, n)

    def _central_quantile_range(self, tail_mass: float) -> tuple[float, float]:
        raise NotImplementedError

    def _mode_locations(self) -> np.ndarray:
        return np.array([0.0])

    def certify(self, tol: float = 1e-8) -> CertificationReport:
        lo, hi = self.support()
        norm, _ = integrate.quad(self.density, lo, hi, points=self._quad_points(), **_QUAD_OPTS)
        mean, _ = integrate.quad(lambda x: x * self.density(x), lo, hi,
                                 points=self._quad_points(), **_QUAD_OPTS)
        grid = self._certification_grid()
        sup_grid = float(np.max(self.density(grid)))
        sup_analytic = float(np.max(self.density(self._mode_locations())))
        try:
            mom = self.pth_moment(self.moment_order)
            moment_ok = mom <= self.sigma_p**self.moment_order * (1 + 1e-9) + tol
        except DivergentMomentError:
            mom = math.inf
            moment_ok = False
        density_cap = self.density_bound * (1 + 1e-12) + 1e-12
        return CertificationReport(
            kind=self.kind,
            mean=float(mean),
            normalization=float(norm),
            density_sup_grid=sup_grid,
            density_sup_analytic=sup_analytic,
            declared_density_bound=self.density_bound,
            moment_order=self.moment_order,
            pth_moment=float(mom),
            declared_sigma_p=self.sigma_p,
            mean_ok=abs(mean) <= tol,
            normalization_ok=abs(norm - 1.0) <= tol,
            density_ok=max(sup_grid, sup_analytic) <= density_cap,
            moment_ok=moment_ok,
        )

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(L={self.density_bound:g}, "
                f"p={self.moment_order:g}, sigma_p={self.sigma_p:g})")


class GaussianNoise(NoiseModel):
    kind = "gaussian"

    def __init__(self, sigma: float = 1.0, moment_order: float = 2.0,
                 sigma_p: float | None = None, density_bound: float | None = None):
        if not np.isfinite(sigma) or sigma <= 0:
            raise NoiseError(f"sigma must be positive, got {sigma}")
        self.sigma = float(sigma)
        if density_bound is None:
            density_bound = 1.0 / (self.sigma * math.sqrt(2 * math.pi))
        super().__init__(density_bound, moment_order, sigma_p)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x / self.sigma) ** 2) / (self.sigma * math.sqrt(2 * math.pi))

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=float) / self.sigma)

    def mean(self) -> float:
        return 0.0

    def density_sup(self) -> float:
        return 1.0 / (self.sigma * math.sqrt(2 * math.pi))

    def upper_partial_moment(self, x: float) -> float:
        return self.sigma**2 * float(self.density(x))

    def _central_quantile_range(self, tail_mass):
        q = stats.norm.ppf(tail_mass / 2, scale=self.sigma)
        return (q, -q)

    def _draw(self, rng, n):
        return rng.normal(0.0, self.sigma, size=n)

    def profile(self):
        return PROFILE_GAUSSIAN, np.array([self.sigma])


class UniformNoise(NoiseModel):
    """Uniform on (-half_width, +half_width)."""

    kind = "uniform"

    def __init__(self, half_width: float = 0.5, moment_order: float = 2.0,
                 sigma_p: float | None = None, density_bound: float | None = None):
        if not np.isfinite(half_width) or half_width <= 0:
            raise NoiseError(f"half_width must be positive, got {half_width}")
        self.half_width = float(half_width)
        if density_bound is None:
            density_bound = 1.0 / (2 * self.half_width)
        super().__init__(density_bound, moment_order, sigma_p)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.half_width, 1.0 / (2 * self.half_width), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x + self.half_width) / (2 * self.half_width), 0.0, 1.0)

    def mean(self) -> float:
        return 0.0

    def density_sup(self) -> float:
        return 1.0 / (2 * self.half_width)

    def support(self):
        return (-self.half_width, self.half_width)

    def density_breakpoints(self):
        return np.array([-self.half_width, self.half_width])

    def upper_partial_moment(self, x: float) -> float:
        a = self.half_width
        xc = min(max(x, -a), a)
        return (a * a - xc * xc) / (4 * a)

    def _draw(self, rng, n):
        return rng.uniform(-self.half_width, self.half_width, size=n)

    def profile(self):
        return PROFILE_UNIFORM, np.array([self.half_width])


class StudentTNoise(NoiseModel):
    """Standard Student-t with nu degrees of freedom; infinite variance for nu < 2.

    Sampling uses the normal/chi-square ratio representation (numpy's
    ``standard_t``). The density normalization constant is kept in closed form.
    """

    kind = "student_t"

    def __init__(self, nu: float, moment_order: float | None = None,
                 sigma_p: float | None = None, density_bound: float | None = None):
        if not np.isfinite(nu) or nu <= 1.0:
            raise NoiseError(f"nu must exceed 1 (finite first moment), got {nu}")
        self.nu = float(nu)
        self._norm = math.gamma((nu + 1) / 2) / (math.sqrt(nu * math.pi) * math.gamma(nu / 2))
        if moment_order is None:
            moment_order = min(2.0, (1.0 + nu) / 2)
        if moment_order >= nu:
            raise DivergentMomentError(
                f"moment_order {moment_order} >= nu {nu}: p-th moment diverges")
        if density_bound is None:
            density_bound = self._norm
        super().__init__(density_bound, moment_order, sigma_p)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self._norm * (1.0 + x * x / self.nu) ** (-(self.nu + 1) / 2)

    def cdf(self, x):
        return stats.t.cdf(np.asarray(x, dtype=float), df=self.nu)

    def mean(self) -> float:
        return 0.0

    def density_sup(self) -> float:
        return self._norm

    def upper_partial_moment(self, x: float) -> float:
        nu = self.nu
        return self._norm * nu / (nu - 1) * (1.0 + x * x / nu) ** ((1 - nu) / 2)

    def pth_moment(self, p: float) -> float:
        if p >= self.nu:
            raise DivergentMomentError(f"p={p} >= nu={self.nu}: moment diverges")
        return super().pth_moment(p)

    def _central_quantile_range(self, tail_mass):
        q = stats.t.ppf(tail_mass / 2, df=self.nu)
        return (q, -q)

    def _draw(self, rng, n):
        return rng.standard_t(self.nu, size=n)

    def profile(self):
        return PROFILE_STUDENT_T, np.array([self.nu, self._norm])


class SmoothedTwoPoint(NoiseModel):
    """Finitely many atoms, each replaced by a uniform bump of width 1/L.

    Bumps are half-open ``[x - 1/(2L), x + 1/(2L))`` so the piecewise-constant
    density is pointwise well defined at junctions. Smoothing keeps the mean of
    the atomic skeleton exactly (bumps are symmetric around their atoms) and
    caps the density at ``weight * L <= L``.

    The mean need not be zero: the same type carries the shifted member of a
    moment-matching pair. Zero-mean is enforced where a model is used as trade
    noise (curve construction and config validation).
    """

    kind = "smoothed_two_point"

    def __init__(self, atoms, density_bound: float,
                 moment_order: float = 1.5, sigma_p: float | None = None):
        atoms = [(float(x), float(w)) for x, w in atoms]
        if not atoms:
            raise NoiseError("at least one atom required")
        L = float(density_bound)
        if not np.isfinite(L) or L <= 0:
            raise NoiseError(f"density_bound must be positive, got {density_bound}")
        weights = np.array([w for _, w in atoms])
        if np.any(weights <= 0):
            raise NoiseError("atom weights must be positive")
        if np.any(weights > 1 + 1e-12):
            raise NoiseError("atom weights must be <= 1 so bump heights stay below L")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise NoiseError(f"atom weights must sum to 1, got {weights.sum()!r}")
        order = np.argsort([x for x, _ in atoms])
        self.atoms = [atoms[i] for i in order]
        self.width = 1.0 / L
        self.left = np.array([x - self.width / 2 for x, _ in self.atoms])
        self.right = np.array([x + self.width / 2 for x, _ in self.atoms])
        self.heights = np.array([w * L for _, w in self.atoms])
        overlap = self.right[:-1] - self.left[1:]
        if np.any(overlap > 1e-12):
            raise NoiseError("bumps overlap; atoms closer than the bump width 1/L")
        self._weights = np.array([w for _, w in self.atoms])
        self._centers = np.array([x for x, _ in self.atoms])
        super().__init__(L, moment_order, sigma_p)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x[..., None] >= self.left) & (x[..., None] < self.right)
        return (inside * self.heights).sum(axis=-1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        filled = np.clip(x[..., None] - self.left, 0.0, self.width)
        return (filled * self.heights).sum(axis=-1)

    def mean(self) -> float:
        return float(np.dot(self._weights, self._centers))

    def density_sup(self) -> float:
        return float(self.heights.max())

    def support(self):
        return (float(self.left[0]), float(self.right[-1]))

    def density_breakpoints(self):
        return np.unique(np.concatenate([self.left, self.right]))

    def upper_partial_moment(self, x: float) -> float:
        a = np.maximum(self.left, x)
        seg = np.where(a < self.right, (self.right**2 - a**2) / 2.0, 0.0)
        return float(np.dot(self.heights, seg))

    def pth_moment(self, p: float) -> float:
        if p <= 0:
            raise NoiseError(f"moment order must be positive, got {p}")
        total = 0.0
        for lo, hi, h in zip(self.left, self.right, self.heights):
            val, _ = integrate.quad(lambda x: np.abs(x) ** p * h, lo, hi,
                                    points=[0.0] if lo < 0.0 < hi else None, **_QUAD_OPTS)
            total += val
        return float(total)

    def _quad_points(self):
        return sorted(set(np.concatenate([self.left, self.right]).tolist() + [0.0]))

    def _mode_locations(self):
        return self._centers

    def _certification_grid(self, n: int = 10_000):
        lo, hi = self.support()
        pad = self.width / 4
        edges = np.concatenate([self.left + 1e-12, self.right - 1e-12])
        return np.concatenate([np.linspace(lo - pad, hi + pad, n), edges])

    def _draw(self, rng, n):
        idx = rng.choice(len(self.atoms), size=n, p=self._weights)
        return self._centers[idx] + (rng.random(n) - 0.5) * self.width

    def profile(self):
        k = len(self.atoms)
        return PROFILE_PIECEWISE, np.concatenate([[k], self.left, self.right, self.heights])


_NOISE_KINDS = {
    "gaussian": (GaussianNoise, {"sigma", "moment_order", "sigma_p", "density_bound"}),
    "uniform": (UniformNoise, {"half_width", "moment_order", "sigma_p", "density_bound"}),
    "student_t": (StudentTNoise, {"nu", "moment_order", "sigma_p", "density_bound"}),
    "smoothed_two_point": (SmoothedTwoPoint, {"atoms", "density_bound", "moment_order", "sigma_p"}),
}


def noise_from_spec(spec: dict) -> NoiseModel:
    """Build a model from a config mapping: {kind: ..., <parameters>}.

    Unknown keys are rejected. Models used as trade noise must be zero-mean;
    that is checked here so config errors surface before any simulation runs.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise NoiseError(f"noise spec must be a mapping with a 'kind' key, got {spec!r}")
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in _NOISE_KINDS:
        raise NoiseError(f"unknown noise kind {kind!r}; expected one of {sorted(_NOISE_KINDS)}")
    cls, allowed = _NOISE_KINDS[kind]
    unknown = set(spec) - allowed
    if unknown:
        raise NoiseError(f"unknown keys {sorted(unknown)} for noise kind {kind!r}")
    model = cls(**spec)
    if abs(model.mean()) > 1e-8:
        raise NoiseError(f"trade noise must be zero-mean; {kind} spec has mean {model.mean():g}")
    return model
