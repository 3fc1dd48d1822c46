"""heavytrade: online contextual bilateral trade under heavy-tailed noise.

Simulates a broker posting prices between two traders whose valuations are a
market value m(x_t) plus independent zero-mean noise with bounded density but
possibly infinite variance. Provides the epoch-based robust pricing policies,
closed-form regret accounting, hard-instance constructions, and an experiment
harness that reproduces the theoretical regret exponents at desk scale.
"""

from .backend import BACKEND
from .noise import (GaussianNoise, SmoothedTwoPoint, StudentTNoise,
                    UniformNoise, noise_from_spec)
from .trade import ExpectedGainCurve, gain_of_trade, gain_upper_bound

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GaussianNoise",
    "UniformNoise",
    "StudentTNoise",
    "SmoothedTwoPoint",
    "noise_from_spec",
    "ExpectedGainCurve",
    "gain_of_trade",
    "gain_upper_bound",
    "__version__",
]
