"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with `pytest tests/test_acceptance.py -v -s`).

Every tolerance is pinned here, not calibrated later. Two sub-criteria are
implemented exactly as stated and are expected to fail; their assertion
messages carry the measured values and the mechanism (see the failure text).
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from heavytrade.config import config_from_dict
from heavytrade.estimators import TruncationConfig, truncated_mean
from heavytrade.harness import fit_rate, run_cell, sweep, theoretical_exponent
from heavytrade.lowerbound import (build_pair, kl_epsilon_sweep, plan_assouad,
                                   remark3_parametric_exponent,
                                   reverse_selfbound_constant)
from heavytrade.noise import StudentTNoise
from heavytrade.policies import theoretical_bandwidth
from heavytrade.trade import default_delta_grid, one_sided_expectations


@contextmanager
def criterion(name):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL ({time.perf_counter() - start:.1f}s)")
        raise
    print(f"[ACCEPTANCE] {name}: PASS ({time.perf_counter() - start:.1f}s)")


def loglog_slope(pairs):
    lx = np.log([t for t, _ in pairs])
    ly = np.log([r for _, r in pairs])
    return float(np.polyfit(lx, ly, 1)[0])


STUDENT_NOISE = {"kind": "student_t", "nu": 1.8, "moment_order": 1.5}
GAUSS_NOISE = {"kind": "gaussian", "sigma": 1.0}


def sweep_config(noise, market, context, policy, horizons, replications=20, seed=20250809):
    return config_from_dict({
        "seed": seed, "horizons": list(horizons), "replications": replications,
        "regret_mode": "both",
        "noise": {"xi": dict(noise), "zeta": dict(noise)},
        "market": market, "context": context, "policies": [policy],
    }, certify=False)


def median_pairs(cfg):
    _, medians = sweep(cfg, jobs=2)
    return [(T, med_a) for (_, T, _, med_a, _) in medians]


def test_self_bounding_suite(all_curves):
    with criterion("self-bounding suite"):
        start = time.perf_counter()
        for name, curve in all_curves.items():
            L = curve.density_bound
            for d in default_delta_grid(curve):
                r = curve.expected_regret_of_offset(float(d))
                assert 0.0 <= r <= L * d * d + 1e-8, (name, d, r)
        # tight case: uniform(-1/2, 1/2), L = 1
        tight = all_curves["uniform"]
        for d in np.linspace(-0.5, 0.5, 21):
            assert tight.expected_regret_of_offset(float(d)) == pytest.approx(
                d * d, abs=1e-10)
        assert time.perf_counter() - start < 60.0


def test_derivative_formula(all_curves):
    with criterion("derivative formula"):
        start = time.perf_counter()
        step = 1e-4
        for name, curve in all_curves.items():
            for d in (-1.0, -0.1, 0.1, 1.0):
                fd = (curve.expected_gain(d + step)
                      - curve.expected_gain(d - step)) / (2 * step)
                assert abs(fd - curve.h_prime(d)) <= 1e-5, (name, d)
        assert time.perf_counter() - start < 60.0


def test_one_sided_identity(all_models, all_curves):
    with criterion("one-sided identity"):
        for name, model in all_models.items():
            for d in default_delta_grid(all_curves[name]):
                psi, phi = one_sided_expectations(model, float(d))
                assert abs((psi - phi) + d) <= 1e-8, (name, d)


@pytest.fixture(scope="module")
def student18_noise():
    return StudentTNoise(1.8, moment_order=1.5)


def test_truncated_mean_rate(student18_noise):
    with criterion("truncated-mean rate (slope)"):
        start = time.perf_counter()
        t = student18_noise
        u = t.pth_moment(1.5)  # certified raw moment bound
        cfg = TruncationConfig(u=u, moment_order=1.5, log_term=math.log(2**18))
        pairs = []
        for n in [2**k for k in range(8, 19, 2)]:
            errs = [abs(truncated_mean(t.sample(n, (seed, n)), cfg))
                    for seed in range(40)]
            pairs.append((n, float(np.median(errs))))
        slope = loglog_slope(pairs)
        assert slope == pytest.approx(-1.0 / 3.0, abs=0.1), pairs
        assert time.perf_counter() - start < 300.0


def test_truncated_mean_outperforms_empirical_mean_2x(student18_noise):
    with criterion("truncated-mean 2x comparison"):
        t = student18_noise
        n = 2**14
        u = t.pth_moment(1.5)
        cfg = TruncationConfig(u=u, moment_order=1.5, log_term=math.log(2**18))
        err_trunc, err_emp = [], []
        for seed in range(40):
            y = t.sample(n, (seed, n, 2))
            err_trunc.append(abs(truncated_mean(y, cfg)))
            err_emp.append(abs(float(np.mean(y))))
        q_emp = float(np.quantile(err_emp, 0.95))
        q_trunc = float(np.quantile(err_trunc, 0.95))
        assert q_emp >= 2.0 * q_trunc, (
            f"95th-pct |error| ratio empirical/truncated = {q_emp / q_trunc:.2f} < 2: "
            f"with tau = (u n / log)^(1/p) = {cfg.tau(n):.0f} truncation barely binds "
            f"t(1.8) samples at n = 2^14, and the plain mean's typical error rate "
            f"n^(-(nu-1)/nu) = n^-0.44 beats the truncated rate n^-1/3 here; the "
            f"population ratio is ~1.4 (4000-seed measurement), so a 2x gap at the "
            f"95th percentile is not attainable at this tail index and sample size "
            f"(it is at nu = 1.5, or at quantiles >= 99.9%)")


def test_parametric_regret_rate():
    with criterion("parametric regret rate (t(1.8), p=1.5)"):
        start = time.perf_counter()
        cfg = sweep_config(
            STUDENT_NOISE,
            {"kind": "linear", "phi": [0.5, -0.3], "norm_bound": 1.0},
            {"kind": "scaled_uniform", "dim": 2},
            {"kind": "parametric", "name": "robust", "p": 1.5, "norm_bound": 1.0,
             "eigen_floor": "auto"},
            horizons=[2**12, 2**14, 2**16, 2**18])
        slope = fit_rate(median_pairs(cfg)).slope
        assert slope == pytest.approx(1.0 / 3.0, abs=0.12), slope
        assert time.perf_counter() - start < 1800.0


def test_parametric_p2_degeneration():
    with criterion("parametric p=2 degeneration (gaussian)"):
        cfg = sweep_config(
            GAUSS_NOISE,
            {"kind": "linear", "phi": [0.5, -0.3], "norm_bound": 1.0},
            {"kind": "scaled_uniform", "dim": 2},
            {"kind": "parametric", "name": "robust", "p": 2.0, "norm_bound": 1.0,
             "eigen_floor": "auto"},
            horizons=[2**12, 2**14, 2**16, 2**18])
        slope = fit_rate(median_pairs(cfg)).slope
        # the exact log T law is reported, not slope-asserted
        print(f"  [report] p=2 parametric slope {slope:.4f} "
              f"(log-regret regime, not a power law)")
        assert slope <= 0.15, slope


NONPAR_MARKET = {"kind": "holder", "preset": "zigzag", "holder_constant": 1.0, "teeth": 2}


def test_nonparametric_regret_rate_student():
    with criterion("nonparametric regret rate (t(1.8), p=1.5)"):
        start = time.perf_counter()
        cfg = sweep_config(
            STUDENT_NOISE, NONPAR_MARKET, {"kind": "uniform", "dim": 1},
            {"kind": "nonparametric", "name": "cells", "bandwidth": "theory", "p": 1.5},
            horizons=[2**12, 2**14, 2**16, 2**18])
        slope = fit_rate(median_pairs(cfg)).slope
        target = theoretical_exponent("nonparametric", 1.5, beta=1.0, d=1).value
        assert slope == pytest.approx(target, abs=0.12), (slope, target)
        assert time.perf_counter() - start < 2700.0


def test_nonparametric_regret_rate_gaussian_p2():
    with criterion("nonparametric regret rate (gaussian, p=2)"):
        cfg = sweep_config(
            GAUSS_NOISE, NONPAR_MARKET, {"kind": "uniform", "dim": 1},
            {"kind": "nonparametric", "name": "cells", "bandwidth": "theory", "p": 2.0},
            horizons=[2**12, 2**14, 2**16, 2**18])
        slope = fit_rate(median_pairs(cfg)).slope
        target = theoretical_exponent("nonparametric", 2.0, beta=1.0, d=1).value
        assert slope == pytest.approx(target, abs=0.12), (
            f"measured slope {slope:.4f} vs {target:.4f}+-0.12: at p = 2 every epoch "
            f"pays a constant estimation total (per-round error^2 ~ 1/n and epoch "
            f"length ~ 2n), so cumulative regret scales like M(T) * log T ~ "
            f"T^(1/3) log T; the log factor adds ~0.14 of local slope over "
            f"2^12..2^18 for any implementation that trains each epoch on the "
            f"previous one, and the +-0.12 window cannot absorb it at these "
            f"horizons (local slopes do decrease toward 1/3: the power law is "
            f"right, the window is not)")


def test_bandwidth_balancing():
    with criterion("bandwidth balancing"):
        T = 2**16
        h_theory = theoretical_bandwidth(1.5, 1.0, 1, T)
        grid = [h_theory * 2.0**k for k in (-2, -1, 0, 1, 2)]
        medians = []
        for h in grid:
            cfg = sweep_config(
                STUDENT_NOISE, NONPAR_MARKET, {"kind": "uniform", "dim": 1},
                {"kind": "nonparametric", "name": "cells", "bandwidth": h, "p": 1.5},
                horizons=[T], seed=424242)
            medians.append(median_pairs(cfg)[0][1])
        best = int(np.argmin(medians))
        assert abs(best - 2) <= 1, (grid, medians)


def test_lowerbound_ingredients(all_models, all_curves):
    with criterion("lower-bound ingredients"):
        start = time.perf_counter()
        sigma_p, L = 1.0, 2.0
        for p in (1.2, 1.5, 1.8):
            # certification of the smoothed pair at a representative gap
            report = build_pair(0.02, p, sigma_p, L).certify(kl_tol=1e-12)
            assert report["ok"], report
            assert report["kl_gap"] <= 1e-12
            # KL slope over gaps whose far-atom weight stays representable
            qs = np.geomspace(1e-9, 1e-2, 9)
            eps = sigma_p * qs ** ((p - 1) / p)
            rows = kl_epsilon_sweep(p, sigma_p, L, eps)
            slope = loglog_slope([(r["epsilon"], r["kl_smoothed"]) for r in rows])
            assert slope == pytest.approx(p / (p - 1), abs=0.05), (p, slope)
        # reverse self-bound on every registered noise model
        for name, model in all_models.items():
            c0, _, regret = reverse_selfbound_constant(
                model, model, 0.25, curve=all_curves[name])
            assert regret + 1e-10 >= c0 * 0.25**2, name
        assert time.perf_counter() - start < 120.0


def test_exponent_algebra():
    with criterion("exponent algebra"):
        tol = 1e-15
        # parametric rows
        assert theoretical_exponent("parametric", 1.5).value == pytest.approx(
            1.0 / 3.0, abs=tol)
        e2 = theoretical_exponent("parametric", 2.0)
        assert e2.value == 0.0 and e2.log_regime
        # nonparametric row at p = 2 collapses to the classical d/(2 beta + d)
        for beta, d in ((1.0, 1), (2.0, 1), (1.0, 3), (0.5, 2)):
            got = theoretical_exponent("nonparametric", 2.0, beta=beta, d=d).value
            assert got == pytest.approx(d / (2 * beta + d), abs=tol), (beta, d)
        # heavy-tailed row at the acceptance parameters
        assert theoretical_exponent("nonparametric", 1.5, beta=1.0, d=1).value \
            == pytest.approx(0.5, abs=tol)
        # p -> 1+ limits approach the trivial linear rate
        assert theoretical_exponent("parametric", 1.0 + 1e-12).value \
            == pytest.approx(1.0, abs=1e-9)
        assert theoretical_exponent("nonparametric", 1.0 + 1e-12, beta=1.0, d=1).value \
            == pytest.approx(1.0, abs=1e-9)
        # beta -> inf recovers the parametric exponent (monotone, checked inside)
        for p in (1.2, 1.5, 1.8):
            assert remark3_parametric_exponent(p) == pytest.approx((2 - p) / p, abs=tol)
        # the plan reproduces the same entries and the sanity limits
        assert plan_assouad(2**16, 2.0, 1.0, 1, 1.0, 1.0).exponent == pytest.approx(
            1.0 / 3.0, abs=tol)
        assert plan_assouad(2**16, 1.0 + 1e-12, 1.0, 1, 1.0, 1.0).exponent \
            == pytest.approx(1.0, abs=1e-9)
        plan = plan_assouad(2**20, 1.5, 1.0, 1, 1.0, 1.0)
        assert plan.grid_side == pytest.approx(2.0**-5, abs=tol)
        assert plan.epsilon == pytest.approx(2.0**-5, abs=tol)
        # bandwidth sanity rows
        assert theoretical_bandwidth(1.5, 1.0, 1, 4096) == pytest.approx(0.125, abs=tol)
        assert theoretical_bandwidth(2.0, 1.0, 1, 2**15) == pytest.approx(
            2.0**-5, abs=tol)


def test_determinism_byte_identical(tmp_path):
    with criterion("determinism (byte-identical rerun)"):
        import yaml

        from heavytrade.cli import main
        config = {
            "seed": 31, "horizons": [64, 256], "replications": 3, "regret_mode": "both",
            "noise": {"xi": STUDENT_NOISE, "zeta": STUDENT_NOISE},
            "market": {"kind": "linear", "phi": [0.5, -0.3], "norm_bound": 1.0},
            "context": {"kind": "scaled_uniform", "dim": 2},
            "policies": [{"kind": "parametric", "name": "robust", "p": 1.5,
                          "eigen_floor": "auto"},
                         {"kind": "oracle", "name": "oracle"}],
        }
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(config))
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
            assert main(["simulate", "--config", str(path), "--out", str(out),
                         "--horizon", "256"]) == 0
            outs.append(out)
        a, b = outs
        assert (a / "medians.csv").read_bytes() == (b / "medians.csv").read_bytes()
        assert ((a / "trace_robust_T256_r0.csv").read_bytes()
                == (b / "trace_robust_T256_r0.csv").read_bytes())
        # summary.csv is byte-identical apart from its schema-mandated wall-clock
        # runtime_ms column (the one self-contradiction in the output contract)
        strip = lambda p: [",".join(l.split(",")[:-1])
                           for l in p.read_text().splitlines()]
        assert strip(a / "summary.csv") == strip(b / "summary.csv")
