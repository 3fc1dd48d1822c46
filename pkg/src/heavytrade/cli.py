"""Command-line entry points.

Subcommands: simulate (one cell, full trace), sweep (grid, summaries),
fit-rate (reads a summary/medians CSV), verify-lemma (self-bounding property
suite), certify-noise (model certification report), lowerbound (hard-instance
plan, pair certification, KL sweep). See README for the file schemas.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lowerbound as lb
from .config import load_config
from .harness import (fit_rate, run_cell, sweep, theoretical_exponent,
                      write_medians_csv, write_summary_csv)
from .noise import GaussianNoise, SmoothedTwoPoint, StudentTNoise, UniformNoise
from .trade import ExpectedGainCurve, lemma_report


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args, certify=True):
    cfg = load_config(args.config, certify=certify)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw = dict(cfg.raw or {})
        cfg.raw["seed"] = args.seed
    return cfg


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    names = cfg.policy_names()
    if args.policy is None:
        index = 0
    elif args.policy in names:
        index = names.index(args.policy)
    else:
        raise SystemExit(f"unknown policy {args.policy!r}; config has {names}")
    horizon = args.horizon if args.horizon is not None else cfg.horizons[0]
    trace = run_cell(cfg, cfg.policy_specs[index], horizon, args.replication,
                     policy_name=names[index])
    path = out / f"trace_{names[index]}_T{horizon}_r{args.replication}.csv"
    trace.write_csv(path)
    diag_path = out / f"diagnostics_{names[index]}_T{horizon}_r{args.replication}.json"
    _write_json(diag_path, trace.fit_diagnostics or [])
    print(f"wrote {path} (final analytic regret {trace.final_regret_analytic:.6g}, "
          f"realized {trace.final_regret_realized:.6g}) and {diag_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    rows, medians = sweep(cfg, jobs=args.jobs)
    write_summary_csv(rows, out / "summary.csv")
    write_medians_csv(medians, out / "medians.csv")
    print(f"wrote {out / 'summary.csv'} ({len(rows)} cell rows) and "
          f"{out / 'medians.csv'} ({len(medians)} median rows)")
    return 0


def _read_csv(path: Path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def cmd_fit_rate(args) -> int:
    header, rows = _read_csv(Path(args.infile))
    metric = args.metric
    col = {"analytic": "final_regret_analytic", "realized": "final_regret_realized"}[metric]
    med_col = f"median_{col}"
    out = _out_dir(args)
    policies = sorted({r["policy"] for r in rows})
    if args.policy is not None:
        if args.policy not in policies:
            raise SystemExit(f"policy {args.policy!r} not in {policies}")
        policies = [args.policy]
    reports = {}
    for policy in policies:
        sub = [r for r in rows if r["policy"] == policy]
        if med_col in header:
            pairs = [(int(r["T"]), float(r[med_col])) for r in sub]
        elif col in header:
            byT = {}
            for r in sub:
                byT.setdefault(int(r["T"]), []).append(float(r[col]))
            pairs = [(T, float(np.median(vals))) for T, vals in sorted(byT.items())]
        else:
            raise SystemExit(f"CSV lacks column {med_col!r} or {col!r}; header = {header}")
        fit = fit_rate(sorted(pairs), theoretical=args.ref_exponent)
        reports[policy] = fit.as_dict()
        ref = "" if args.ref_exponent is None else f" (theory {args.ref_exponent:.4f})"
        print(f"{policy}: slope {fit.slope:.4f} +- {fit.stderr:.4f}{ref}")
    path = out / "rate_fit.json"
    _write_json(path, {"metric": metric, "fits": reports})
    print(f"wrote {path}")
    return 0


_BUILTIN_PAIRS = None


def builtin_noise_pairs():
    global _BUILTIN_PAIRS
    if _BUILTIN_PAIRS is None:
        two_point = SmoothedTwoPoint([(-0.3, 0.5), (0.3, 0.5)],
                                     density_bound=2.0, moment_order=1.5)
        _BUILTIN_PAIRS = [
            ("uniform", UniformNoise(0.5)),
            ("gaussian", GaussianNoise(1.0)),
            ("student_t_1.8", StudentTNoise(1.8, moment_order=1.5)),
            ("smoothed_two_point", two_point),
        ]
    return _BUILTIN_PAIRS


def cmd_verify_lemma(args) -> int:
    if args.config is not None:
        cfg = _load(args)
        curves = [("config", cfg.curve)]
    else:
        curves = [(name, ExpectedGainCurve(model, model))
                  for name, model in builtin_noise_pairs()]
    out = _out_dir(args)
    payload = {}
    failures = 0
    for name, curve in curves:
        checks = lemma_report(curve)
        payload[name] = checks
        for c in checks:
            status = "PASS" if c["passed"] else "FAIL"
            failures += 0 if c["passed"] else 1
            print(f"[{status}] {name}: {c['check']} (worst {c['worst']:.3e})")
    _write_json(out / "lemma_report.json", payload)
    print(f"wrote {out / 'lemma_report.json'}")
    return 1 if failures else 0


def cmd_certify_noise(args) -> int:
    cfg = _load(args, certify=False)
    out = _out_dir(args)
    payload = {"xi": cfg.noise_xi.certify().as_dict(),
               "zeta": cfg.noise_zeta.certify().as_dict()}
    _write_json(out / "noise_certification.json", payload)
    ok = payload["xi"]["ok"] and payload["zeta"]["ok"]
    print(f"xi: {'PASS' if payload['xi']['ok'] else 'FAIL'}  "
          f"zeta: {'PASS' if payload['zeta']['ok'] else 'FAIL'}")
    print(f"wrote {out / 'noise_certification.json'}")
    return 0 if ok else 1


def _loglog_slope(xs, ys) -> float:
    lx, ly = np.log(xs), np.log(ys)
    return float(np.polyfit(lx, ly, 1)[0])


def cmd_lowerbound(args) -> int:
    out = _out_dir(args)
    plan = lb.plan_assouad(args.T, args.p, args.beta, args.d, args.LH, args.mu0)
    # The pair at the planned amplitude; infeasible amplitudes are a real error.
    pair = lb.build_pair(plan.epsilon, args.p, args.sigma_p, args.L)
    cert = pair.certify()
    n_cell = plan.samples_per_cell
    kl_joint = lb.kl_joint_smoothed(pair)
    barrier = {
        "per_cell_samples": n_cell,
        "kl_joint_per_round": kl_joint,
        "n_times_kl": n_cell * kl_joint,
        "le_cam_budget": lb.LE_CAM_KL_BUDGET,
        "testing_error_lower_bound": 0.5 * (1 - (n_cell * kl_joint / 2) ** 0.5)
        if n_cell * kl_joint < 2 else 0.0,
    }
    epsilons = np.geomspace(args.eps_min, args.eps_max, args.eps_points)
    sweep_rows = lb.kl_epsilon_sweep(args.p, args.sigma_p, args.L, epsilons)
    kl_slope = _loglog_slope([r["epsilon"] for r in sweep_rows],
                             [r["kl_smoothed"] for r in sweep_rows])
    payload = {
        "plan": plan.as_dict(),
        "pair_certification": cert,
        "barrier": barrier,
        "kl_sweep_slope": kl_slope,
        "kl_exponent_theory": args.p / (args.p - 1.0),
    }
    _write_json(out / "lowerbound.json", payload)
    with open(out / "kl_sweep.csv", "w", newline="") as fh:
        fh.write("epsilon,kl_atomic,kl_smoothed,kl_joint\n")
        for r in sweep_rows:
            fh.write(",".join(format(r[k], ".17g")
                              for k in ("epsilon", "kl_atomic", "kl_smoothed", "kl_joint"))
                     + "\n")
    print(f"plan: h={plan.grid_side:.6g} eps={plan.epsilon:.6g} cells={plan.cells} "
          f"exponent={plan.exponent:.6g}")
    print(f"pair certification {'PASS' if cert['ok'] else 'FAIL'}; "
          f"KL slope {kl_slope:.4f} vs p/(p-1) = {args.p / (args.p - 1):.4f}")
    print(f"wrote {out / 'lowerbound.json'} and {out / 'kl_sweep.csv'}")
    return 0 if cert["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavytrade",
                                     description="Bilateral-trade pricing experiments "
                                                 "under heavy-tailed noise")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, default=None,
                       help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("simulate", help="one (policy, horizon, replication) cell, full trace")
    common(p)
    p.add_argument("--policy", default=None, help="policy name (default: first)")
    p.add_argument("--horizon", type=int, default=None, help="horizon (default: first)")
    p.add_argument("--replication", type=int, default=0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="run all (policy, horizon, replication) cells")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("fit-rate", help="log-log slope of regret vs horizon")
    p.add_argument("--in", dest="infile", required=True,
                   help="summary.csv or medians.csv from sweep")
    p.add_argument("--metric", choices=("analytic", "realized"), default="analytic")
    p.add_argument("--policy", default=None, help="restrict to one policy")
    p.add_argument("--ref-exponent", type=float, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_fit_rate)

    p = sub.add_parser("verify-lemma", help="self-bounding property suite")
    common(p, config_required=False)
    p.set_defaults(fn=cmd_verify_lemma)

    p = sub.add_parser("certify-noise", help="verify declared noise constants")
    common(p)
    p.set_defaults(fn=cmd_certify_noise)

    p = sub.add_parser("lowerbound", help="hard-instance plan and KL certification")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--LH", type=float, required=True, help="Hölder constant")
    p.add_argument("--mu0", type=float, required=True, help="context density floor")
    p.add_argument("--L", type=float, required=True, help="density bound of the pair")
    p.add_argument("--sigma-p", dest="sigma_p", type=float, required=True)
    p.add_argument("--eps-min", type=float, default=1e-3)
    p.add_argument("--eps-max", type=float, default=1e-1)
    p.add_argument("--eps-points", type=int, default=9)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_lowerbound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
