"""Command-line entry point: ``pinchrsma <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .ao import AOConfig
from .experiments import ALL_SCHEMES, ExperimentConfig, Sweep, run_experiment, run_scheme, trial_seed, trial_users
from .oracle import GridSpec, grid_optimize

SWEEP_DEFAULTS = {
    "sweep-power": (Sweep.USER_POWER, [0.0, 5.0, 10.0, 15.0, 20.0, 23.0], {}),
    "sweep-antennas": (Sweep.NUM_ANTENNAS, [2.0, 4.0, 6.0, 8.0, 10.0], {"region_x": 60.0, "region_y": 60.0}),
    "sweep-rmin": (Sweep.TARGET_RATE, [0.0, 0.4, 0.8, 1.2, 1.6, 2.0], {}),
    "sweep-region": (Sweep.REGION_SIZE, [10.0, 20.0, 30.0, 40.0, 50.0], {}),
}

# flag -> ExperimentConfig field
FIELD_FLAGS = {
    "users": "num_users", "antennas": "num_antennas", "freq": "carrier_freq", "rmin": "r_min",
    "pmax_dbm": "p_max_dbm", "noise_dbm": "noise_dbm", "neff": "refractive_index", "height": "waveguide_height",
    "region_x": "region_x", "region_y": "region_y", "starts": "num_starts", "active": "selective_active",
    "trials": "trials", "seed": "seed", "out": "out", "values": "values", "schemes": "schemes",
}


def _csv_list(kind):
    def parse(text):
        return [kind(t) for t in text.split(",") if t.strip()]
    return parse


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--schemes", type=_csv_list(str), help=f"comma list from {','.join(ALL_SCHEMES)}")
    p.add_argument("--out", type=str)
    p.add_argument("--users", type=int)
    p.add_argument("--antennas", type=int)
    p.add_argument("--freq", type=float, help="carrier frequency in Hz")
    p.add_argument("--rmin", type=float, help="minimum user rate in bps/Hz")
    p.add_argument("--pmax-dbm", type=float)
    p.add_argument("--noise-dbm", type=float)
    p.add_argument("--neff", type=float, help="waveguide refractive index")
    p.add_argument("--height", type=float, help="waveguide height in metres")
    p.add_argument("--region-x", type=float)
    p.add_argument("--region-y", type=float)
    p.add_argument("--starts", type=int, help="AO multi-start count")
    p.add_argument("--active", type=int, help="active antennas for discrete-selective")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinchrsma", description="Pinching-antenna uplink RSMA experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SWEEP_DEFAULTS:
        p = sub.add_parser(name, help=f"Monte Carlo campaign ({name})")
        _add_common(p)
        p.add_argument("--values", type=_csv_list(float), help="comma-separated sweep values")
    p = sub.add_parser("oracle-check", help="compare AO against exhaustive grid search on small instances")
    _add_common(p)
    p.add_argument("--step", type=float, default=0.25, help="grid position step in metres")
    p.add_argument("--levels", type=int, default=11, help="power levels per stream")
    p = sub.add_parser("single-run", help="one user drop, result printed as JSON")
    _add_common(p)
    return parser


def make_config(args: argparse.Namespace, sweep: Sweep, values, overrides: dict) -> ExperimentConfig:
    data = {"sweep": sweep.value, "values": values, **overrides}
    if args.config is not None:
        data.update(json.loads(args.config.read_text()))
        data["sweep"] = sweep.value
    for flag, name in FIELD_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[name] = v
    return ExperimentConfig.from_dict(data)


def _single_run(cfg: ExperimentConfig) -> dict:
    scenario, r_min, p_max = cfg.point(cfg.values[0])
    users = trial_users(cfg, 0, scenario)
    ao = AOConfig(num_starts=cfg.num_starts, seed=trial_seed(cfg, 0))
    out = {"users": users.tolist(), "results": []}
    for scheme in cfg.schemes:
        res = run_scheme(scheme, scenario, users, ao, r_min, p_max, cfg.selective_active)
        out["results"].append({
            "scheme": scheme, "feasible": res.feasible, "sum_rate": res.sum_rate,
            "user_rates": [float(r) for r in res.user_rates],
            "layout": list(res.layout.positions) if res.layout is not None else None,
            "powers": {str(k): float(v) for k, v in res.powers.as_dict().items()} if res.powers is not None else None,
            "iterations": res.iterations,
        })
    return out


def _oracle_check(cfg: ExperimentConfig, step: float, levels: int) -> list[dict]:
    rows = []
    for trial in range(cfg.trials):
        scenario, r_min, p_max = cfg.point(cfg.values[0])
        users = trial_users(cfg, trial, scenario)
        ao = AOConfig(num_starts=cfg.num_starts, seed=trial_seed(cfg, trial))
        for scheme in cfg.schemes:
            if scheme.startswith("discrete"):
                continue
            t0 = time.perf_counter()
            orc = grid_optimize(scenario, users, scheme, GridSpec(step, levels), r_min=r_min, p_max=p_max)
            res = run_scheme(scheme, scenario, users, ao, r_min, p_max)
            ratio = res.sum_rate / orc.sum_rate if orc.feasible and res.feasible else float("nan")
            rows.append({"trial": trial, "scheme": scheme, "ao_sum_rate": res.sum_rate,
                         "oracle_sum_rate": orc.sum_rate, "ratio": ratio,
                         "wall_time_s": time.perf_counter() - t0})
    return rows


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in SWEEP_DEFAULTS:
        sweep, values, overrides = SWEEP_DEFAULTS[args.command]
        cfg = make_config(args, sweep, values, overrides)
        rows = run_experiment(cfg)
        for r in rows:
            print(f"{r.sweep}={r.sweep_value:g} {r.scheme:<18} mean={r.mean_sum_rate:.4f} "
                  f"feasible={r.feasible_trials}/{r.trials}")
        return 0
    if args.command == "single-run":
        cfg = make_config(args, Sweep.USER_POWER, [23.0], {"trials": 1})
        if args.pmax_dbm is not None:
            cfg.values = [args.pmax_dbm]
        print(json.dumps(_single_run(cfg), indent=2, default=str))
        return 0
    # oracle-check: small instance defaults
    cfg = make_config(args, Sweep.USER_POWER, [23.0],
                      {"num_antennas": 2, "region_x": 40.0, "region_y": 40.0, "trials": 5,
                       "schemes": ["rsma"], "out": "results/oracle_check"})
    if args.pmax_dbm is not None:
        cfg.values = [args.pmax_dbm]
    rows = _oracle_check(cfg, args.step, args.levels)
    out = Path(cfg.out).with_suffix(".jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    ratios = np.array([r["ratio"] for r in rows])
    print(f"AO / oracle ratio: min={np.nanmin(ratios):.4f} median={np.nanmedian(ratios):.4f} "
          f">=0.95 on {int(np.sum(ratios >= 0.95))}/{ratios.size}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
