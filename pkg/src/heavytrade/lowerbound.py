"""Lower-bound ingredients: the smoothed moment-matching pair, exact KL
computations, the reverse self-bounding constant, and the cell/amplitude
optimization behind the minimax rate.

The hard pair is built from an atomic skeleton: P0 puts all mass at 0, P1
moves mass q = (eps/sigma_p)^(p/(p-1)) to b = eps/q, so the means differ by
exactly eps while the p-th moment of the far atom is q * b^p = sigma_p^p.
Each atom is then replaced by a uniform bump of width 1/L (disjointness
required), which keeps the mean gap exact, caps the densities at L, and --
because both distributions are constant on each shared bump -- leaves the KL
divergence identical to the atomic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .harness import theoretical_exponent
from .noise import SmoothedTwoPoint
from .policies import theoretical_bandwidth
from .trade import ExpectedGainCurve

__all__ = [
    "LowerBoundError",
    "TwoPointPair",
    "AssouadPlan",
    "build_pair",
    "kl_atomic",
    "kl_smoothed",
    "kl_joint_smoothed",
    "reverse_selfbound_constant",
    "plan_assouad",
    "remark3_parametric_exponent",
    "kl_epsilon_sweep",
]

LE_CAM_KL_BUDGET = 0.5  # n * KL <= 1/2 keeps the testing error >= 1/4


class LowerBoundError(ValueError):
    """Infeasible lower-bound construction."""


@dataclass(frozen=True)
class TwoPointPair:
    """Atomic skeleton and its smoothed (bounded-density) version."""

    epsilon: float
    moment_order: float
    sigma_p: float
    density_bound: float
    atoms0: tuple          # ((location, weight), ...)
    atoms1: tuple
    smoothed0: SmoothedTwoPoint
    smoothed1: SmoothedTwoPoint

    @property
    def mean_gap_atomic(self) -> float:
        m0 = sum(x * w for x, w in self.atoms0)
        m1 = sum(x * w for x, w in self.atoms1)
        return m1 - m0

    @property
    def mean_gap_smoothed(self) -> float:
        return self.smoothed1.mean() - self.smoothed0.mean()

    def moment_budget(self) -> float:
        """Relaxed cap on both smoothed p-th moments: 2 * sigma_p^p."""
        return 2.0 * self.sigma_p**self.moment_order

    def certify(self, kl_tol: float = 1e-12) -> dict:
        """All smoothing-invariance checks: mean gap, KL, moments, density caps."""
        p = self.moment_order
        budget = self.moment_budget()
        kl_a = kl_atomic(self)
        kl_s = kl_smoothed(self)
        report = {
            "epsilon": self.epsilon,
            "mean_gap_atomic": self.mean_gap_atomic,
            "mean_gap_smoothed": self.mean_gap_smoothed,
            "kl_atomic": kl_a,
            "kl_smoothed": kl_s,
            "kl_gap": abs(kl_s - kl_a),
            "pth_moment_p0": self.smoothed0.pth_moment(p),
            "pth_moment_p1": self.smoothed1.pth_moment(p),
            "moment_budget": budget,
            "density_sup_p0": self.smoothed0.density_sup(),
            "density_sup_p1": self.smoothed1.density_sup(),
            "density_bound": self.density_bound,
        }
        report["mean_gap_ok"] = (abs(report["mean_gap_atomic"] - self.epsilon) <= 1e-12
                                 and abs(report["mean_gap_smoothed"] - self.epsilon) <= 1e-12)
        report["kl_ok"] = report["kl_gap"] <= kl_tol
        report["moments_ok"] = (report["pth_moment_p0"] <= budget * (1 + 1e-9)
                                and report["pth_moment_p1"] <= budget * (1 + 1e-9))
        report["density_ok"] = (report["density_sup_p0"] <= self.density_bound * (1 + 1e-12)
                                and report["density_sup_p1"] <= self.density_bound * (1 + 1e-12))
        report["ok"] = (report["mean_gap_ok"] and report["kl_ok"]
                        and report["moments_ok"] and report["density_ok"])
        return report


def build_pair(epsilon: float, p: float, sigma_p: float, density_bound: float) -> TwoPointPair:
    """Moment-matching pair with mean gap epsilon and bounded smoothed densities.

    Preconditions: eps < L^(p-1)/2 (the non-overlap condition), p in (1, 2),
    sigma_p > 0. eps = 0 degenerates to P0 = P1.
    """
    if not 1.0 < p < 2.0:
        raise LowerBoundError(f"p must lie in (1, 2), got {p}")
    if sigma_p <= 0:
        raise LowerBoundError(f"sigma_p must be positive, got {sigma_p}")
    L = float(density_bound)
    if L <= 0:
        raise LowerBoundError(f"density_bound must be positive, got {density_bound}")
    if epsilon < 0:
        raise LowerBoundError(f"epsilon must be nonnegative, got {epsilon}")
    if epsilon >= L ** (p - 1.0) / 2.0:
        raise LowerBoundError(
            f"epsilon {epsilon:g} violates the non-overlap condition eps < L^(p-1)/2 "
            f"= {L ** (p - 1.0) / 2.0:g}")

    atoms0 = ((0.0, 1.0),)
    if epsilon == 0.0:
        atoms1 = atoms0
    else:
        q = (epsilon / sigma_p) ** (p / (p - 1.0))
        if q >= 1.0:
            raise LowerBoundError(
                f"epsilon {epsilon:g} too large for moment budget sigma_p={sigma_p:g}")
        b = epsilon / q
        atoms1 = ((0.0, 1.0 - q), (b, q))
    from .noise import NoiseError
    try:
        smoothed0 = SmoothedTwoPoint(atoms0, density_bound=L, moment_order=p)
        smoothed1 = SmoothedTwoPoint(atoms1, density_bound=L, moment_order=p)
    except NoiseError as exc:
        raise LowerBoundError(f"smoothing failed: {exc}") from exc
    return TwoPointPair(epsilon=float(epsilon), moment_order=p, sigma_p=float(sigma_p),
                        density_bound=L, atoms0=atoms0, atoms1=atoms1,
                        smoothed0=smoothed0, smoothed1=smoothed1)


def _atom_weights(pair: TwoPointPair):
    locs = sorted({x for x, _ in pair.atoms0} | {x for x, _ in pair.atoms1})
    w0 = {x: 0.0 for x in locs}
    w1 = {x: 0.0 for x in locs}
    for x, w in pair.atoms0:
        w0[x] += w
    for x, w in pair.atoms1:
        w1[x] += w
    return locs, w0, w1


def kl_atomic(pair: TwoPointPair) -> float:
    """Discrete KL(P0 || P1) over the shared atom locations.

    Mass of P0 on an atom P1 lacks makes the divergence infinite (support
    mismatch flag).
    """
    locs, w0, w1 = _atom_weights(pair)
    total = 0.0
    for x in locs:
        if w0[x] == 0.0:
            continue
        if w1[x] == 0.0:
            return math.inf
        total += w0[x] * math.log(w0[x] / w1[x])
    return total


def kl_smoothed(pair: TwoPointPair) -> float:
    """Exact piecewise-constant KL(P0 || P1) of the smoothed pair.

    On each bump both densities are constant (weight * L), so the integral
    reduces to the atomic weight ratio: smoothing preserves KL exactly.
    """
    locs, w0, w1 = _atom_weights(pair)
    width = pair.smoothed0.width
    total = 0.0
    for x in locs:
        if w0[x] == 0.0:
            continue
        if w1[x] == 0.0:
            return math.inf
        f0 = w0[x] / width
        f1 = w1[x] / width
        total += f0 * math.log(f0 / f1) * width
    return total


def kl_joint_smoothed(pair: TwoPointPair) -> float:
    """KL of the full-feedback pair observation (V, W) under product noise.

    Computed directly on the product of the piecewise-constant densities over
    the grid of bump rectangles; equals exactly twice the marginal KL.
    """
    locs, w0, w1 = _atom_weights(pair)
    width = pair.smoothed0.width
    total = 0.0
    for x in locs:
        for y in locs:
            m0 = w0[x] * w0[y]
            if m0 == 0.0:
                continue
            m1 = w1[x] * w1[y]
            if m1 == 0.0:
                return math.inf
            f0 = m0 / (width * width)
            f1 = m1 / (width * width)
            total += f0 * math.log(f0 / f1) * width * width
    return total


def reverse_selfbound_constant(noise_xi, noise_zeta, epsilon: float,
                               grid_points: int = 4001, curve: ExpectedGainCurve | None = None):
    """c0 = inf over [-eps, eps] of (f_xi + f_zeta)/2, with the regret check.

    Returns (c0, degenerate, regret_at_eps). ``degenerate`` flags c0 = 0, where
    the construction gives a vacuous bound. The companion inequality
    expected_regret_of_offset(eps) >= c0 * eps^2 is certified via the curve.
    """
    if epsilon <= 0:
        raise LowerBoundError(f"epsilon must be positive, got {epsilon}")
    grid = np.linspace(-epsilon, epsilon, grid_points)
    vals = 0.5 * (np.asarray(noise_xi.density(grid)) + np.asarray(noise_zeta.density(grid)))
    c0 = float(vals.min())
    if curve is None:
        curve = ExpectedGainCurve(noise_xi, noise_zeta)
    regret = curve.expected_regret_of_offset(epsilon)
    if regret + 1e-9 < c0 * epsilon**2:
        raise LowerBoundError(
            f"reverse self-bound violated: regret({epsilon}) = {regret:.6g} "
            f"< c0*eps^2 = {c0 * epsilon ** 2:.6g}")
    return c0, c0 == 0.0, regret


@dataclass(frozen=True)
class AssouadPlan:
    """Cell side, bump amplitude, per-cell budget, and the predicted exponent."""

    horizon: int
    p: float
    beta: float
    d: int
    holder_constant: float
    density_floor: float
    grid_side: float
    epsilon: float
    cells: int
    samples_per_cell: float
    exponent: float
    barrier: float
    c0: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def plan_assouad(horizon: int, p: float, beta: float, d: int,
                 holder_constant: float, density_floor: float,
                 noise_xi=None, noise_zeta=None) -> AssouadPlan:
    """Instantiate the hard-instance geometry at horizon T.

    h = T^(-(p-1)/(beta p + d(p-1))), eps = L_H h^beta, n = mu_0 T h^d / 2, and
    the regret exponent 1 - 2 beta (p-1)/(beta p + d (p-1)). The moment-matching
    barrier (T h^d)^(-(p-1)/p) equals h^beta by construction; ``barrier``
    reports it so the caller can verify both constraints are active. c0 is
    filled when a noise pair is supplied.
    """
    if horizon < 2:
        raise LowerBoundError(f"horizon must be >= 2, got {horizon}")
    if not 1.0 < p <= 2.0:
        raise LowerBoundError(f"p must lie in (1, 2], got {p}")
    if beta <= 0 or d < 1 or holder_constant <= 0 or density_floor <= 0:
        raise LowerBoundError("beta, d, holder_constant, density_floor must be positive")
    h = theoretical_bandwidth(p, beta, d, horizon)
    eps = holder_constant * h**beta
    cells = math.ceil(1.0 / h) ** d
    n = density_floor * horizon * h**d / 2.0
    exponent = theoretical_exponent("nonparametric", p, beta=beta, d=d).value
    barrier = (horizon * h**d) ** (-(p - 1.0) / p)
    c0 = None
    if noise_xi is not None and noise_zeta is not None:
        c0 = reverse_selfbound_constant(noise_xi, noise_zeta, eps)[0]
    return AssouadPlan(horizon=int(horizon), p=p, beta=beta, d=int(d),
                       holder_constant=holder_constant, density_floor=density_floor,
                       grid_side=h, epsilon=eps, cells=cells, samples_per_cell=n,
                       exponent=exponent, barrier=barrier, c0=c0)


def remark3_parametric_exponent(p: float, d: int = 1,
                                betas=(1.0, 10.0, 100.0, 1000.0)) -> float:
    """(2-p)/p, verified as the monotone large-beta limit of the nonparametric exponent."""
    if not 1.0 < p < 2.0:
        raise LowerBoundError(f"p must lie in (1, 2), got {p}")
    if d < 1:
        raise LowerBoundError(f"d must be >= 1, got {d}")
    target = (2.0 - p) / p
    gaps = [theoretical_exponent("nonparametric", p, beta=b, d=d).value - target
            for b in betas]
    if any(g < -1e-12 for g in gaps):
        raise LowerBoundError("nonparametric exponent fell below the parametric limit")
    if any(g2 > g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:])):
        raise LowerBoundError("nonparametric exponent not monotone in beta")
    if gaps[-1] > max(1e-2, 10.0 / betas[-1]):
        raise LowerBoundError(
            f"beta={betas[-1]} exponent still {gaps[-1]:.3g} above the parametric limit")
    return target


def kl_epsilon_sweep(p: float, sigma_p: float, density_bound: float, epsilons) -> list[dict]:
    """KL of the smoothed pair across a grid of mean gaps (for the slope check)."""
    rows = []
    for eps in epsilons:
        pair = build_pair(eps, p, sigma_p, density_bound)
        rows.append({
            "epsilon": float(eps),
            "kl_atomic": kl_atomic(pair),
            "kl_smoothed": kl_smoothed(pair),
            "kl_joint": kl_joint_smoothed(pair),
        })
    return rows
