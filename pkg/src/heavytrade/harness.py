"""Experiment runner: simulate pricing rounds, account regret two ways, sweep
horizons, and fit empirical rates against the theoretical exponents.

Regret is booked per round both as *realized* (oracle gain minus policy gain,
both evaluated on the same drawn valuation pair, heavy-tailed) and *analytic*
(the exact expected
regret of the known offset delta_t = P_t - m(x_t), computed by the closed-form
kernels and cross-checked against quadrature by the tests). Rate fitting uses
the analytic column: under p < 2 the realized column has infinite variance.

Seeding: a root seed expands through numpy ``SeedSequence`` spawn keys to
(replication, stream) generators, streams 0/1/2 = contexts/xi/zeta. Context
and noise draws therefore never depend on the policy under test (common
random numbers).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .backend import kernels
from .config import ExperimentConfig, config_from_dict
from .policies import policy_from_spec
from .trade import gain_upper_bound

__all__ = [
    "HarnessError",
    "RegretTrace",
    "SummaryRow",
    "RateFit",
    "RateExponent",
    "run_cell",
    "sweep",
    "fit_rate",
    "theoretical_exponent",
    "stream_generator",
    "TRACE_BASE_COLUMNS",
    "SUMMARY_COLUMNS",
    "MEDIAN_COLUMNS",
]

STREAM_CONTEXTS, STREAM_XI, STREAM_ZETA = 0, 1, 2

TRACE_BASE_COLUMNS = ["t", "epoch", "price", "v", "w", "delta",
                      "inst_regret_analytic", "cum_regret_analytic",
                      "inst_regret_realized", "cum_regret_realized"]
SUMMARY_COLUMNS = ["policy", "T", "replication", "seed",
                   "final_regret_analytic", "final_regret_realized", "runtime_ms"]
MEDIAN_COLUMNS = ["policy", "T", "n_replications",
                  "median_final_regret_analytic", "median_final_regret_realized"]


class HarnessError(RuntimeError):
    """Simulation or rate-fit failure."""


def _fmt(x) -> str:
    """17 significant digits: round-trips float64 exactly, so reruns are byte-stable."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def stream_generator(root_seed: int, replication: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(root_seed, spawn_key=(replication, stream))
    return np.random.default_rng(ss)


def replication_seed(root_seed: int, replication: int) -> int:
    """Stable integer label for a replication's streams (summary 'seed' column)."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(replication, STREAM_CONTEXTS))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RegretTrace:
    """Per-round record of one simulated cell."""

    policy: str
    horizon: int
    replication: int
    seed: int
    t: np.ndarray
    epoch: np.ndarray
    contexts: np.ndarray
    price: np.ndarray
    v: np.ndarray
    w: np.ndarray
    delta: np.ndarray
    inst_regret_analytic: np.ndarray
    inst_regret_realized: np.ndarray
    fit_diagnostics: list | None = None

    @property
    def cum_regret_analytic(self) -> np.ndarray:
        return np.cumsum(self.inst_regret_analytic)

    @property
    def cum_regret_realized(self) -> np.ndarray:
        return np.cumsum(self.inst_regret_realized)

    @property
    def final_regret_analytic(self) -> float:
        return float(self.inst_regret_analytic.sum())

    @property
    def final_regret_realized(self) -> float:
        return float(self.inst_regret_realized.sum())

    def columns(self) -> list[str]:
        d = self.contexts.shape[1]
        xcols = [f"x_{j}" for j in range(d)]
        return TRACE_BASE_COLUMNS[:2] + xcols + TRACE_BASE_COLUMNS[2:]

    def write_csv(self, path) -> None:
        cum_a = self.cum_regret_analytic
        cum_r = self.cum_regret_realized
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.columns()) + "\n")
            for i in range(self.t.size):
                row = ([_fmt(self.t[i]), _fmt(self.epoch[i])]
                       + [_fmt(v) for v in self.contexts[i]]
                       + [_fmt(self.price[i]), _fmt(self.v[i]), _fmt(self.w[i]),
                          _fmt(self.delta[i]),
                          _fmt(self.inst_regret_analytic[i]), _fmt(cum_a[i]),
                          _fmt(self.inst_regret_realized[i]), _fmt(cum_r[i])])
                fh.write(",".join(row) + "\n")


class SummaryRow(NamedTuple):
    policy: str
    horizon: int
    replication: int
    seed: int
    final_regret_analytic: float
    final_regret_realized: float
    runtime_ms: float


def run_cell(cfg: ExperimentConfig, policy_spec: dict, horizon: int,
             replication: int, policy_name: str | None = None) -> RegretTrace:
    """Simulate one (policy, horizon, replication) cell; deterministic per seed."""
    if horizon not in cfg.horizons:
        raise HarnessError(f"horizon {horizon} not in config horizons {cfg.horizons}")
    if not 0 <= replication < cfg.replications:
        raise HarnessError(f"replication {replication} outside [0, {cfg.replications})")

    rng_x = stream_generator(cfg.seed, replication, STREAM_CONTEXTS)
    rng_xi = stream_generator(cfg.seed, replication, STREAM_XI)
    rng_zeta = stream_generator(cfg.seed, replication, STREAM_ZETA)

    x = cfg.context.sample(horizon, rng_x)
    xi = cfg.noise_xi.sample(horizon, rng_xi)
    zeta = cfg.noise_zeta.sample(horizon, rng_zeta)

    policy = policy_from_spec(policy_spec, horizon, cfg.market, cfg.context,
                              p=cfg.moment_order, sigma_p=cfg.sigma_p)
    # Evaluate m on the same epoch slices the policy sees, so an oracle's
    # delta is exactly zero (identical arithmetic on identical views).
    m = np.empty(horizon)
    v = np.empty(horizon)
    w = np.empty(horizon)
    prices = np.empty(horizon)
    try:
        for start, end in policy.schedule.spans():
            sl = slice(start - 1, end - 1)
            m[sl] = np.asarray(cfg.market.value_batch(x[sl]), dtype=float)
            v[sl] = m[sl] + xi[sl]
            w[sl] = m[sl] + zeta[sl]
            prices[sl] = policy.price_block(x[sl])
            policy.feedback_block(x[sl], v[sl], w[sl])
    except FloatingPointError as exc:  # pragma: no cover - defensive
        raise HarnessError(f"numeric failure near round {policy._next_price_t}: {exc}")

    t = np.arange(1, horizon + 1, dtype=np.int64)
    epoch = np.floor(np.log2(t)).astype(np.int64) + 1
    delta = prices - m
    curve = cfg.curve
    inst_analytic = curve.regret_batch(delta)
    inst_realized = (np.asarray(kernels.gain_batch(m, v, w))
                     - np.asarray(kernels.gain_batch(prices, v, w)))
    return RegretTrace(
        policy=policy_name or policy.name, horizon=horizon, replication=replication,
        seed=replication_seed(cfg.seed, replication),
        t=t, epoch=epoch, contexts=x, price=prices, v=v, w=w, delta=delta,
        inst_regret_analytic=np.asarray(inst_analytic),
        inst_regret_realized=inst_realized,
        fit_diagnostics=policy.diagnostics,
    )


def _run_cell_from_raw(raw_config: dict, policy_index: int, horizon: int,
                       replication: int) -> SummaryRow:
    cfg = config_from_dict(raw_config, certify=False)
    spec = cfg.policy_specs[policy_index]
    name = cfg.policy_names()[policy_index]
    start = time.perf_counter()
    trace = run_cell(cfg, spec, horizon, replication, policy_name=name)
    runtime_ms = (time.perf_counter() - start) * 1e3
    return SummaryRow(name, horizon, replication, trace.seed,
                      trace.final_regret_analytic, trace.final_regret_realized, runtime_ms)


def sweep(cfg: ExperimentConfig, jobs: int = 1):
    """Run every (policy, horizon, replication) cell.

    Returns (summary_rows, median_rows); rows are ordered by (policy index,
    horizon, replication) regardless of execution order, so output files are
    reproducible (the wall-clock runtime_ms column aside).
    """
    if cfg.raw is None:
        raise HarnessError("sweep needs a config built from a dict (raw missing)")
    cells = [(i, T, r)
             for i in range(len(cfg.policy_specs))
             for T in cfg.horizons
             for r in range(cfg.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_from_raw,
                                 [cfg.raw] * len(cells),
                                 *zip(*cells), chunksize=1))
    else:
        rows = [_run_cell_from_raw(cfg.raw, *cell) for cell in cells]

    names = cfg.policy_names()
    rows.sort(key=lambda row: (names.index(row.policy), row.horizon, row.replication))

    medians = []
    for name in names:
        for T in cfg.horizons:
            group = [r for r in rows if r.policy == name and r.horizon == T]
            medians.append((name, T, len(group),
                            float(np.median([r.final_regret_analytic for r in group])),
                            float(np.median([r.final_regret_realized for r in group]))))
    return rows, medians


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join([r.policy, str(r.horizon), str(r.replication), str(r.seed),
                               _fmt(r.final_regret_analytic), _fmt(r.final_regret_realized),
                               _fmt(r.runtime_ms)]) + "\n")


def write_medians_csv(medians, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(MEDIAN_COLUMNS) + "\n")
        for name, T, n, med_a, med_r in medians:
            fh.write(",".join([name, str(T), str(n), _fmt(med_a), _fmt(med_r)]) + "\n")


class RateExponent(NamedTuple):
    value: float
    log_regime: bool


def theoretical_exponent(setting: str, p: float, beta: float | None = None,
                         d: int | None = None) -> RateExponent:
    """Predicted log-log regret slope.

    parametric: (2-p)/p, zero at p = 2 where the regret law is logarithmic
    (log_regime flag). nonparametric: 1 - 2*beta*(p-1)/(beta*p + d*(p-1)).
    """
    if not 1.0 < p <= 2.0:
        raise HarnessError(f"p must lie in (1, 2], got {p}")
    if setting == "parametric":
        return RateExponent((2.0 - p) / p, log_regime=(p == 2.0))
    if setting == "nonparametric":
        if beta is None or beta <= 0:
            raise HarnessError(f"nonparametric exponent needs beta > 0, got {beta}")
        if d is None or d < 1:
            raise HarnessError(f"nonparametric exponent needs d >= 1, got {d}")
        return RateExponent(1.0 - 2.0 * beta * (p - 1.0) / (beta * p + d * (p - 1.0)),
                            log_regime=False)
    raise HarnessError(f"setting must be parametric|nonparametric, got {setting!r}")


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log T, log regret)."""

    horizons: tuple
    regrets: tuple
    slope: float
    intercept: float
    stderr: float
    residuals: tuple
    theoretical: float | None = None

    def as_dict(self) -> dict:
        return {
            "horizons": list(self.horizons),
            "regrets": list(self.regrets),
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "residuals": list(self.residuals),
            "theoretical_exponent": self.theoretical,
        }


def fit_rate(pairs, theoretical: float | None = None) -> RateFit:
    """Slope of log regret against log horizon; needs >= 3 distinct horizons."""
    pairs = [(int(T), float(R)) for T, R in pairs]
    horizons = [T for T, _ in pairs]
    if len(set(horizons)) < 3:
        raise HarnessError(f"rate fit needs >= 3 distinct horizons, got {sorted(set(horizons))}")
    for T, R in pairs:
        if not R > 0:
            raise HarnessError(f"nonpositive regret {R} at horizon {T}: log undefined")
    logT = np.log([T for T, _ in pairs])
    logR = np.log([R for _, R in pairs])
    A = np.stack([logT, np.ones_like(logT)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logR, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = logR - A @ coef
    dof = len(pairs) - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        denom = float(np.sum((logT - logT.mean()) ** 2))
        stderr = math.sqrt(s2 / denom) if denom > 0 else float("nan")
    else:
        stderr = 0.0
    return RateFit(horizons=tuple(horizons), regrets=tuple(R for _, R in pairs),
                   slope=slope, intercept=intercept, stderr=stderr,
                   residuals=tuple(float(r) for r in resid), theoretical=theoretical)


def bad_event_cap(cfg: ExperimentConfig) -> float:
    """Per-round regret ceiling 2*max(sigma_p); the regret integral's monotone limit
    stays below it."""
    return gain_upper_bound(cfg.noise_xi, cfg.noise_zeta)
