import numpy as np
import pytest

from heavytrade.noise import (GaussianNoise, SmoothedTwoPoint, StudentTNoise,
                              UniformNoise)
from heavytrade.trade import ExpectedGainCurve


@pytest.fixture(scope="session")
def gaussian():
    return GaussianNoise(1.0)


@pytest.fixture(scope="session")
def uniform():
    return UniformNoise(0.5)


@pytest.fixture(scope="session")
def student18():
    return StudentTNoise(1.8, moment_order=1.5)


@pytest.fixture(scope="session")
def two_point():
    # zero-mean pair of bumps at +-0.3, width 1/L = 0.5
    return SmoothedTwoPoint([(-0.3, 0.5), (0.3, 0.5)], density_bound=2.0, moment_order=1.5)


@pytest.fixture(scope="session")
def all_models(uniform, gaussian, student18, two_point):
    return {
        "uniform": uniform,
        "gaussian": gaussian,
        "student_t": student18,
        "smoothed_two_point": two_point,
    }


@pytest.fixture(scope="session")
def all_curves(all_models):
    return {name: ExpectedGainCurve(m, m) for name, m in all_models.items()}


def quad_regret(curve, delta):
    """Quadrature route, used as the oracle for the closed-form kernels."""
    return curve.expected_regret_of_offset(float(delta))


@pytest.fixture(scope="session")
def parametric_raw_config():
    return {
        "seed": 20250809,
        "horizons": [64, 256, 1024],
        "replications": 3,
        "regret_mode": "both",
        "noise": {"xi": {"kind": "uniform", "half_width": 0.5},
                  "zeta": {"kind": "uniform", "half_width": 0.5}},
        "market": {"kind": "linear", "phi": [0.5, -0.3], "norm_bound": 1.0},
        "context": {"kind": "scaled_uniform", "dim": 2},
        "policies": [
            {"kind": "parametric", "name": "robust", "p": 1.5, "eigen_floor": "auto"},
            {"kind": "oracle", "name": "oracle"},
        ],
    }
