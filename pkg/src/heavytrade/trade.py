"""Gain-of-trade mechanics and closed-form expected-gain/regret quantities.

The central objects are the gain function

    g(price, v, w) = |v - w| * 1{min(v,w) <= price <= max(v,w)}

and, for a pair of zero-mean noise models (xi, zeta), the expected-gain curve
h(delta) = E[g(m + delta, m + xi, m + zeta)], which does not depend on m.
Pricing at offset delta loses h(0) - h(delta), computable as the integral of
s * [f_xi(s) + f_zeta(s)] over [0, delta]; that loss is bounded by L*delta^2
when both densities are bounded by L, and it is what the harness books as
analytic per-round regret.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .backend import kernels
from .noise import NoiseModel

__all__ = [
    "TradeError",
    "QuadratureError",
    "ExpectedGainCurve",
    "gain_of_trade",
    "gain_upper_bound",
    "one_sided_expectations",
    "default_delta_grid",
]


class TradeError(ValueError):
    """Invalid arguments to a trade computation."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


def gain_of_trade(price: float, valuation_v: float, valuation_w: float) -> float:
    """Welfare realized by posting ``price`` between valuations v and w.

    Boundary inclusive on both ends; symmetric in (v, w); v == w trades zero.
    """
    if not (math.isfinite(price) and math.isfinite(valuation_v) and math.isfinite(valuation_w)):
        raise TradeError(
            f"non-finite input to gain_of_trade: {(price, valuation_v, valuation_w)}")
    lo, hi = min(valuation_v, valuation_w), max(valuation_v, valuation_w)
    return hi - lo if lo <= price <= hi else 0.0


def gain_upper_bound(noise_xi, noise_zeta) -> float:
    """Cap on the expected gain at the optimal price: 2 * max(sigma_p).

    Used by the harness as the bad-event per-round regret ceiling.
    """
    return 2.0 * max(noise_xi.sigma_p, noise_zeta.sigma_p)


def _quad(f, lo, hi, abs_tol, limit, points=None):
    if points is not None:
        points = [p for p in points if lo < p < hi]
        if not points or math.isinf(lo) or math.isinf(hi):
            points = None
    out = integrate.quad(f, lo, hi, epsabs=abs_tol, epsrel=abs_tol,
                         limit=limit, points=points, full_output=True)
    val, abserr = out[0], out[1]
    if len(out) > 3:  # warning/error message present
        raise QuadratureError(
            f"quadrature failed on [{lo}, {hi}]: {out[3]} (achieved abs error {abserr:.3g})")
    if abserr > max(abs_tol * 100, 1e-13) and abserr > abs(val) * 1e-6:
        raise QuadratureError(
            f"quadrature reached abs error {abserr:.3g} > requested {abs_tol:.3g}")
    return val


def one_sided_expectations(noise: NoiseModel, delta: float,
                           abs_tol: float = 1e-10, max_subdivisions: int = 200):
    """(Psi, Phi) = (E[(xi - delta)^+], E[(delta - xi)^+]) by quadrature.

    For a zero-mean model the pair satisfies Psi - Phi = -delta; a gross
    violation of that identity means the quadrature failed and raises.
    """
    if not math.isfinite(delta):
        raise TradeError(f"delta must be finite, got {delta}")
    lo, hi = noise.support()
    pts = noise.density_breakpoints().tolist()
    psi = 0.0
    if delta < hi:
        psi = _quad(lambda x: (x - delta) * noise.density(x), max(delta, lo), hi,
                    abs_tol, max_subdivisions, points=pts)
    phi = 0.0
    if delta > lo:
        phi = _quad(lambda x: (delta - x) * noise.density(x), lo, min(delta, hi),
                    abs_tol, max_subdivisions, points=pts)
    gap = (psi - phi) - (noise.mean() - delta)
    if abs(gap) > max(1e-8, 1e3 * abs_tol):
        raise QuadratureError(
            f"one-sided identity violated by {gap:.3g}; quadrature unreliable here")
    return float(psi), float(phi)


@dataclass(frozen=True)
class ExpectedGainCurve:
    """Expected gain of trade as a function of the price offset delta.

    Both models must be zero-mean with declared density bounds and a finite
    p-th moment for some p > 1 (checked at construction).
    """

    noise_xi: NoiseModel
    noise_zeta: NoiseModel
    abs_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        for name, model in (("xi", self.noise_xi), ("zeta", self.noise_zeta)):
            if abs(model.mean()) > 1e-8:
                raise TradeError(f"noise {name} must be zero-mean, has mean {model.mean():g}")
            if not model.moment_order > 1:
                raise TradeError(f"noise {name} needs a moment order > 1")
        if self.abs_tol <= 0 or self.max_subdivisions < 10:
            raise TradeError("invalid quadrature spec")

    @property
    def density_bound(self) -> float:
        """L = max of the two declared density bounds."""
        return max(self.noise_xi.density_bound, self.noise_zeta.density_bound)

    def density_sum(self, s):
        return self.noise_xi.density(s) + self.noise_zeta.density(s)

    def _breakpoints(self):
        return np.concatenate([self.noise_xi.density_breakpoints(),
                               self.noise_zeta.density_breakpoints()]).tolist()

    # -- exact-density formulas ------------------------------------------------------

    def h_prime(self, delta: float) -> float:
        """Slope of the expected gain: -delta * [f_xi(delta) + f_zeta(delta)]."""
        if not math.isfinite(delta):
            raise TradeError(f"delta must be finite, got {delta}")
        return float(-delta * self.density_sum(delta))

    def expected_regret_of_offset(self, delta: float) -> float:
        """h(0) - h(delta) by adaptive quadrature; always in [0, L*delta^2]."""
        if not math.isfinite(delta):
            raise TradeError(f"delta must be finite, got {delta}")
        if delta == 0.0:
            return 0.0
        lo, hi = min(0.0, delta), max(0.0, delta)
        val = _quad(lambda s: abs(s) * self.density_sum(s), lo, hi,
                    self.abs_tol, self.max_subdivisions, points=self._breakpoints())
        cap = self.density_bound * delta * delta
        slack = max(1e-9, 100 * self.abs_tol)
        if val < -slack or val > cap + slack:
            raise QuadratureError(
                f"regret integral {val:.6g} outside [0, L*delta^2={cap:.6g}] at delta={delta}")
        return max(float(val), 0.0)

    def regret_batch(self, deltas) -> np.ndarray:
        """Closed-form vectorized regret of offsets (kernel route).

        Same quantity as :meth:`expected_regret_of_offset`; the quadrature
        route stays as the independent cross-check.
        """
        code_x, par_x = self.noise_xi.profile()
        code_z, par_z = self.noise_zeta.profile()
        return np.asarray(kernels.regret_profile(
            np.atleast_1d(np.asarray(deltas, dtype=float)), code_x, par_x, code_z, par_z))

    def expected_gain(self, delta: float) -> float:
        """h(delta) via one-sided expectations and exact cdfs (quadrature route)."""
        if not math.isfinite(delta):
            raise TradeError(f"delta must be finite, got {delta}")
        psi_x, phi_x = one_sided_expectations(self.noise_xi, delta,
                                              self.abs_tol, self.max_subdivisions)
        psi_z, phi_z = one_sided_expectations(self.noise_zeta, delta,
                                              self.abs_tol, self.max_subdivisions)
        fx = float(self.noise_xi.cdf(delta))
        fz = float(self.noise_zeta.cdf(delta))
        return psi_x * fz + phi_z * (1.0 - fx) + psi_z * fx + phi_x * (1.0 - fz)

    def expected_gain_monte_carlo(self, delta: float, n_samples: int, seed):
        """Unbiased Monte-Carlo estimate of h(delta): (estimate, std_error).

        Uses the noise-coordinate representation
        g(m+delta, V, W) = (xi - zeta) 1{zeta <= delta <= xi} + (zeta - xi) 1{xi <= delta <= zeta},
        so the market value never enters. Deterministic given the seed.
        """
        if n_samples < 1:
            raise TradeError(f"n_samples must be >= 1, got {n_samples}")
        rng = np.random.default_rng(seed)
        xi = self.noise_xi.sample(n_samples, rng)
        zeta = self.noise_zeta.sample(n_samples, rng)
        gains = kernels.gain_batch(np.full(n_samples, float(delta)), xi, zeta)
        estimate = float(np.mean(gains))
        std_error = float(np.std(gains, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
        return estimate, std_error


def default_delta_grid(curve: ExpectedGainCurve, n: int = 41, radius: float = 3.0) -> np.ndarray:
    """41 equally spaced offsets in [-3, 3] plus the finite support edges."""
    pts = list(np.linspace(-radius, radius, n))
    for model in (curve.noise_xi, curve.noise_zeta):
        lo, hi = model.support()
        for edge in (lo, hi):
            if math.isfinite(edge):
                pts.append(edge)
    return np.unique(np.asarray(pts, dtype=float))


def lemma_report(curve: ExpectedGainCurve, deltas=None,
                 fd_deltas=(-1.0, -0.1, 0.0, 0.1, 1.0), fd_step: float = 1e-4,
                 selfbound_tol: float = 1e-8, derivative_tol: float = 1e-5,
                 identity_tol: float = 1e-8) -> list[dict]:
    """Numeric verification of the self-bounding lemma on one noise pair.

    Returns one record per check: self-bounding cap, derivative formula by
    finite differences of the quadrature gain, the one-sided identity, the
    sign of the slope, nonnegativity/monotonicity of the regret integral, and
    quadrature/kernel agreement.
    """
    if deltas is None:
        deltas = default_delta_grid(curve)
    deltas = np.asarray(deltas, dtype=float)
    L = curve.density_bound
    checks = []

    regret = np.array([curve.expected_regret_of_offset(d) for d in deltas])
    gap = regret - L * deltas**2
    checks.append({"check": "self_bounding", "passed": bool(np.all(gap <= selfbound_tol)),
                   "worst": float(gap.max()), "tol": selfbound_tol})

    fd_err = []
    for d in fd_deltas:
        fd = (curve.expected_gain(d + fd_step) - curve.expected_gain(d - fd_step)) / (2 * fd_step)
        fd_err.append(abs(fd - curve.h_prime(d)))
    checks.append({"check": "derivative_formula", "passed": bool(max(fd_err) <= derivative_tol),
                   "worst": float(max(fd_err)), "tol": derivative_tol})

    ident_err = []
    for model in (curve.noise_xi, curve.noise_zeta):
        for d in deltas:
            psi, phi = one_sided_expectations(model, float(d),
                                              curve.abs_tol, curve.max_subdivisions)
            ident_err.append(abs((psi - phi) + d))
    checks.append({"check": "one_sided_identity", "passed": bool(max(ident_err) <= identity_tol),
                   "worst": float(max(ident_err)), "tol": identity_tol})

    slopes = np.array([curve.h_prime(d) for d in deltas])
    sign_ok = np.all(slopes * deltas <= 0.0)
    strict = [s < 0 for s, d in zip(slopes * np.sign(deltas), deltas)
              if d != 0 and curve.density_sum(d) > 0]
    checks.append({"check": "slope_sign", "passed": bool(sign_ok and all(strict)),
                   "worst": float(np.max(slopes * deltas)), "tol": 0.0})

    # Monotone in |delta| along each sign branch (asymmetric densities need not
    # order the two branches against each other).
    idx = np.argsort(deltas)
    ds, rs = deltas[idx], regret[idx]
    growth = np.concatenate([np.diff(rs[ds >= 0]), np.diff(rs[ds <= 0][::-1])])
    checks.append({"check": "regret_monotone_nonnegative",
                   "passed": bool(np.all(regret >= 0.0) and np.all(growth >= -1e-12)),
                   "worst": float(min(regret.min(), growth.min(initial=0.0))), "tol": 0.0})

    kernel_gap = np.abs(curve.regret_batch(deltas) - regret)
    checks.append({"check": "kernel_quadrature_agreement",
                   "passed": bool(kernel_gap.max() <= max(1e-10, 100 * curve.abs_tol)),
                   "worst": float(kernel_gap.max()), "tol": 1e-10})
    return checks
