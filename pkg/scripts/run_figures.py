#!/usr/bin/env python3
"""Run the Monte Carlo campaigns behind each sum-rate figure and write tidy plot tables.

    python scripts/run_figures.py --figures fig2a,fig2c --trials 10 --out-dir results
"""

import argparse
from dataclasses import replace
from pathlib import Path

from pinchrsma.experiments import ALL_SCHEMES, ExperimentConfig, Figure, Sweep, emit_plot_data, run_experiment

POWER = [0.0, 5.0, 10.0, 15.0, 20.0, 23.0]
RMIN = [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]
THREE_USERS = dict(num_users=3, r_min=0.01, region_x=30.0, region_y=30.0)

FIGURES = {
    Figure.FIG2A: ExperimentConfig(sweep=Sweep.USER_POWER, values=POWER),
    Figure.FIG2B: ExperimentConfig(sweep=Sweep.NUM_ANTENNAS, values=[2, 4, 6, 8, 10], region_x=60.0, region_y=60.0),
    Figure.FIG2C: ExperimentConfig(sweep=Sweep.TARGET_RATE, values=RMIN),
    Figure.FIG3A: ExperimentConfig(sweep=Sweep.USER_POWER, values=POWER, **THREE_USERS),
    Figure.FIG3B: ExperimentConfig(sweep=Sweep.REGION_SIZE, values=[10.0, 20.0, 30.0, 40.0, 50.0], **THREE_USERS),
    Figure.FIG3C: ExperimentConfig(sweep=Sweep.TARGET_RATE, values=RMIN, num_users=3, region_x=80.0, region_y=80.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--figures", default=",".join(f.value for f in Figure))
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--schemes", default=",".join(ALL_SCHEMES))
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    args = ap.parse_args()
    schemes = [s for s in args.schemes.split(",") if s]
    for name in args.figures.split(","):
        fig = Figure(name)
        cfg = replace(FIGURES[fig], trials=args.trials, seed=args.seed, schemes=schemes,
                      out=str(args.out_dir / fig.value))
        rows = run_experiment(cfg)
        if set(schemes) >= set(ALL_SCHEMES):
            emit_plot_data(rows, fig, args.out_dir / f"{fig.value}.plot.csv")
        for r in rows:
            print(f"{fig.value} x={r.sweep_value:g} {r.scheme:<18} mean={r.mean_sum_rate:.3f} "
                  f"feasible={r.feasibility_rate:.2f}")


if __name__ == "__main__":
    main()
