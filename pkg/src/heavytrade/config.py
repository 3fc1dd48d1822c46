"""Experiment configuration: a strict YAML document.

Schema (unknown keys are rejected everywhere; see README for the full
reference):

    seed: 12345                    # root seed, expands to per-(replication, stream) seeds
    horizons: [4096, 16384]        # each >= 2
    replications: 20               # >= 1
    regret_mode: both              # analytic | realized | both
    output_dir: out                # optional; CLI --out overrides
    quadrature: {abs_tol: 1.0e-10, max_subdivisions: 200}      # optional
    noise:
      xi:   {kind: student_t, nu: 1.8, moment_order: 1.5}
      zeta: {kind: student_t, nu: 1.8, moment_order: 1.5}
    market: {kind: linear, phi: [0.5, -0.3], norm_bound: 1.0}
    context: {kind: scaled_uniform, dim: 2}
    policies:
      - {kind: parametric, name: robust, eigen_floor: auto}
      - {kind: oracle, name: oracle}
    constants: {matrix_hoeffding_c1: 4.0, chernoff_c1: 8.0}    # optional, documentation-only
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import estimators
from .market import ContextSampler, Market, context_from_spec, market_from_spec
from .noise import NoiseModel, noise_from_spec
from .policies import validate_policy_spec
from .trade import ExpectedGainCurve

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]

_TOP_KEYS = {"seed", "horizons", "replications", "regret_mode", "output_dir",
             "quadrature", "noise", "market", "context", "policies", "constants"}
_QUAD_KEYS = {"abs_tol", "max_subdivisions"}
_CONST_KEYS = {"matrix_hoeffding_c1", "chernoff_c1"}
_REGRET_MODES = ("analytic", "realized", "both")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def _reject_unknown(mapping: dict, allowed: set, where: str):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


@dataclass
class ExperimentConfig:
    """Validated configuration with the model objects already built."""

    seed: int
    horizons: list[int]
    replications: int
    regret_mode: str
    noise_xi: NoiseModel
    noise_zeta: NoiseModel
    market: Market
    context: ContextSampler
    policy_specs: list[dict]
    output_dir: str | None = None
    quadrature: dict = field(default_factory=lambda: {"abs_tol": 1e-10,
                                                      "max_subdivisions": 200})
    constants: dict = field(default_factory=lambda: {
        "matrix_hoeffding_c1": estimators.MATRIX_HOEFFDING_C1,
        "chernoff_c1": estimators.CHERNOFF_C1,
    })
    raw: dict | None = None  # original mapping, for worker processes

    @property
    def curve(self) -> ExpectedGainCurve:
        return ExpectedGainCurve(self.noise_xi, self.noise_zeta,
                                 abs_tol=self.quadrature["abs_tol"],
                                 max_subdivisions=self.quadrature["max_subdivisions"])

    @property
    def moment_order(self) -> float:
        """Certified moment order of the pair: the smaller of the two."""
        return min(self.noise_xi.moment_order, self.noise_zeta.moment_order)

    @property
    def sigma_p(self) -> float:
        """Moment bound of the pair: the larger of the two (covers (xi+zeta)/2)."""
        return max(self.noise_xi.sigma_p, self.noise_zeta.sigma_p)

    def policy_names(self) -> list[str]:
        return [spec.get("name", f"{spec['kind']}_{i}")
                for i, spec in enumerate(self.policy_specs)]


def config_from_dict(raw: dict, certify: bool = True) -> ExperimentConfig:
    _reject_unknown(raw, _TOP_KEYS, "config")
    for key in ("seed", "horizons", "replications", "noise", "market", "context", "policies"):
        if key not in raw:
            raise ConfigError(f"missing required config key {key!r}")

    horizons = list(raw["horizons"])
    if not horizons or any((not isinstance(t, int)) or t < 2 for t in horizons):
        raise ConfigError(f"horizons must be a nonempty list of ints >= 2, got {horizons!r}")
    replications = raw["replications"]
    if not isinstance(replications, int) or replications < 1:
        raise ConfigError(f"replications must be an int >= 1, got {replications!r}")
    seed = raw["seed"]
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative int, got {seed!r}")
    regret_mode = raw.get("regret_mode", "both")
    if regret_mode not in _REGRET_MODES:
        raise ConfigError(f"regret_mode must be one of {_REGRET_MODES}, got {regret_mode!r}")

    quadrature = {"abs_tol": 1e-10, "max_subdivisions": 200}
    if "quadrature" in raw:
        _reject_unknown(raw["quadrature"], _QUAD_KEYS, "quadrature")
        quadrature.update(raw["quadrature"])
    constants = {"matrix_hoeffding_c1": estimators.MATRIX_HOEFFDING_C1,
                 "chernoff_c1": estimators.CHERNOFF_C1}
    if "constants" in raw:
        _reject_unknown(raw["constants"], _CONST_KEYS, "constants")
        constants.update(raw["constants"])

    _reject_unknown(raw["noise"], {"xi", "zeta"}, "noise")
    if "xi" not in raw["noise"] or "zeta" not in raw["noise"]:
        raise ConfigError("noise section needs both 'xi' and 'zeta'")
    noise_xi = noise_from_spec(raw["noise"]["xi"])
    noise_zeta = noise_from_spec(raw["noise"]["zeta"])
    market = market_from_spec(raw["market"])
    context = context_from_spec(raw["context"])
    if context.dim != market.dim:
        raise ConfigError(f"context dim {context.dim} != market dim {market.dim}")

    if not isinstance(raw["policies"], list) or not raw["policies"]:
        raise ConfigError("policies must be a nonempty list")
    for spec in raw["policies"]:
        validate_policy_spec(spec)

    if certify:
        for label, model in (("xi", noise_xi), ("zeta", noise_zeta)):
            report = model.certify()
            if not report.ok:
                raise ConfigError(f"noise {label} failed certification: {report.as_dict()}")

    return ExperimentConfig(
        seed=seed, horizons=horizons, replications=replications, regret_mode=regret_mode,
        noise_xi=noise_xi, noise_zeta=noise_zeta, market=market, context=context,
        policy_specs=[dict(s) for s in raw["policies"]],
        output_dir=raw.get("output_dir"), quadrature=quadrature, constants=constants,
        raw=raw,
    )


def load_config(path, certify: bool = True) -> ExperimentConfig:
    text = Path(path).read_text()
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return config_from_dict(raw, certify=certify)
