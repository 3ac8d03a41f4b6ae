"""Monte Carlo sweep campaigns with CSV / JSON-lines persistence."""

from __future__ import annotations

import csv
import enum
import json
import math
import subprocess
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .ao import AOConfig, RunResult, run
from .baselines import default_grid, run_discrete
from .geometry import Scenario, dbm_to_watt
from .rates import Scheme

ALL_SCHEMES = ("rsma", "noma", "sdma", "discrete-full", "discrete-selective")
PLOT_COLUMNS = ("x", "scheme", "mean", "std", "feasibility")


class Sweep(str, enum.Enum):
    USER_POWER = "power"        # P_max in dBm
    NUM_ANTENNAS = "antennas"
    TARGET_RATE = "rmin"        # bps/Hz
    REGION_SIZE = "region"      # D_x in metres, D_y unchanged


class Figure(str, enum.Enum):
    FIG2A = "fig2a"
    FIG2B = "fig2b"
    FIG2C = "fig2c"
    FIG3A = "fig3a"
    FIG3B = "fig3b"
    FIG3C = "fig3c"


FIGURE_SWEEP = {
    Figure.FIG2A: Sweep.USER_POWER, Figure.FIG2B: Sweep.NUM_ANTENNAS, Figure.FIG2C: Sweep.TARGET_RATE,
    Figure.FIG3A: Sweep.USER_POWER, Figure.FIG3B: Sweep.REGION_SIZE, Figure.FIG3C: Sweep.TARGET_RATE,
}
FIGURE_SCHEMES = {fig: ALL_SCHEMES for fig in Figure}


class MissingSeries(ValueError):
    pass


@dataclass
class ExperimentConfig:
    sweep: Sweep = Sweep.USER_POWER
    values: list = field(default_factory=lambda: [23.0])
    schemes: list = field(default_factory=lambda: list(ALL_SCHEMES))
    trials: int = 50
    seed: int = 0
    out: str = "results/campaign"
    num_users: int = 2
    num_antennas: int = 6
    carrier_freq: float = 28e9
    r_min: float = 0.7
    p_max_dbm: float = 23.0
    noise_dbm: float = -90.0
    refractive_index: float = 1.4
    waveguide_height: float = 3.0
    region_x: float = 80.0
    region_y: float = 80.0
    num_starts: int = 5
    selective_active: int | None = None

    def __post_init__(self):
        self.sweep = Sweep(self.sweep)
        self.values = [float(v) for v in self.values]
        self.schemes = [s.lower() for s in self.schemes]
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.values:
            raise ValueError("sweep values must be non-empty")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be sorted")
        unknown = set(self.schemes) - set(ALL_SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes: {sorted(unknown)}")
        if self.sweep is Sweep.NUM_ANTENNAS and any(v != int(v) or v < 1 for v in self.values):
            raise ValueError("antenna counts must be positive integers")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = self.sweep.value
        return d

    def point(self, value: float) -> tuple[Scenario, float, float]:
        """Scenario, R_min and P_max (W) at one sweep value."""
        n, rx, r_min, p_dbm = self.num_antennas, self.region_x, self.r_min, self.p_max_dbm
        if self.sweep is Sweep.USER_POWER:
            p_dbm = value
        elif self.sweep is Sweep.NUM_ANTENNAS:
            n = int(value)
        elif self.sweep is Sweep.TARGET_RATE:
            r_min = value
        else:
            rx = value
        sc = Scenario(region_x=rx, region_y=self.region_y, carrier_freq=self.carrier_freq,
                      refractive_index=self.refractive_index, waveguide_height=self.waveguide_height,
                      noise_power=dbm_to_watt(self.noise_dbm), num_antennas=n, num_users=self.num_users)
        return sc, r_min, dbm_to_watt(p_dbm)


@dataclass
class TrialRecord:
    sweep_value: float
    scheme: str
    trial: int
    feasible: bool
    sum_rate: float
    user_rates: list
    iterations: int
    error: str = ""


@dataclass
class ResultRow:
    sweep: str
    sweep_value: float
    scheme: str
    mean_sum_rate: float
    std_sum_rate: float
    feasibility_rate: float
    feasible_trials: int
    trials: int
    mean_iterations: float
    failures: int


def trial_users(config: ExperimentConfig, trial: int, scenario: Scenario) -> np.ndarray:
    """Uniform user drop; the same unit draw is reused at every sweep value."""
    rng = np.random.default_rng([config.seed, trial])
    unit = rng.random((config.num_users, 2))
    return unit * np.array([scenario.region_x, scenario.region_y])


def trial_seed(config: ExperimentConfig, trial: int) -> int:
    return int(np.random.SeedSequence([config.seed, trial, 1]).generate_state(1)[0])


def run_scheme(scheme: str, scenario, users, ao: AOConfig, r_min, p_max, selective_active=None) -> RunResult:
    if scheme in ("rsma", "noma", "sdma"):
        return run(scenario, users, Scheme(scheme), ao, r_min=r_min, p_max=p_max)
    grid = default_grid(scenario, selective_active)
    mode = "full" if scheme == "discrete-full" else "selective"
    return run_discrete(scenario, users, ao, grid, mode, r_min=r_min, p_max=p_max)


def run_trials(config: ExperimentConfig) -> list[TrialRecord]:
    records = []
    for value in config.values:
        scenario, r_min, p_max = config.point(value)
        for trial in range(config.trials):
            users = trial_users(config, trial, scenario)
            ao = AOConfig(num_starts=config.num_starts, seed=trial_seed(config, trial))
            for scheme in config.schemes:
                try:
                    res = run_scheme(scheme, scenario, users, ao, r_min, p_max, config.selective_active)
                    rec = TrialRecord(value, scheme, trial, res.feasible, float(res.sum_rate),
                                      [float(r) for r in res.user_rates], res.iterations)
                except Exception as exc:  # recorded, campaign continues
                    rec = TrialRecord(value, scheme, trial, False, math.nan, [], 0, f"{type(exc).__name__}: {exc}")
                records.append(rec)
    return records


def aggregate(config: ExperimentConfig, records: list[TrialRecord]) -> list[ResultRow]:
    rows = []
    for value in config.values:
        for scheme in config.schemes:
            recs = [r for r in records if r.sweep_value == value and r.scheme == scheme]
            ok = [r for r in recs if r.feasible]
            rates = np.array([r.sum_rate for r in ok])
            rows.append(ResultRow(
                config.sweep.value, value, scheme,
                float(rates.mean()) if ok else math.nan,
                float(rates.std()) if ok else math.nan,
                len(ok) / len(recs) if recs else 0.0, len(ok), len(recs),
                float(np.mean([r.iterations for r in ok])) if ok else math.nan,
                sum(1 for r in recs if r.error)))
    return rows


def _git_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path: Path, rows: list) -> None:
    names = [f.name for f in fields(rows[0])] if rows else [f.name for f in fields(ResultRow)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([_fmt(getattr(row, n)) for n in names])


def write_jsonl(path: Path, rows: list) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(asdict(row), sort_keys=True) + "\n")


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run a campaign and persist ``<out>.csv``, ``<out>.jsonl``,
    ``<out>.trials.jsonl`` and ``<out>.meta.json``."""
    start = time.perf_counter()
    records = run_trials(config)
    rows = aggregate(config, records)
    out = Path(config.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out.with_suffix(".csv"), rows)
    write_jsonl(out.with_suffix(".jsonl"), rows)
    write_jsonl(out.with_suffix(".trials.jsonl"), records)
    meta = {"config": config.to_dict(), "git_revision": _git_revision(),
            "wall_time_s": time.perf_counter() - start}
    out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return rows


def emit_plot_data(rows: list[ResultRow], figure, path=None) -> list[dict]:
    """Tidy table with columns ``x, scheme, mean, std, feasibility``.

    Written as CSV when ``path`` is given.
    """
    figure = Figure(figure)
    sweep = FIGURE_SWEEP[figure].value
    sel = [r for r in rows if r.sweep == sweep]
    if not sel:
        raise MissingSeries(f"no rows for the {sweep} sweep needed by {figure.value}")
    present = {r.scheme for r in sel}
    missing = [s for s in FIGURE_SCHEMES[figure] if s not in present]
    if missing:
        raise MissingSeries(f"{figure.value} is missing series: {', '.join(missing)}")
    table = [dict(zip(PLOT_COLUMNS, (r.sweep_value, r.scheme, r.mean_sum_rate, r.std_sum_rate, r.feasibility_rate)))
             for r in sorted(sel, key=lambda r: (ALL_SCHEMES.index(r.scheme), r.sweep_value))]
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PLOT_COLUMNS)
            for t in table:
                w.writerow([_fmt(t[c]) for c in PLOT_COLUMNS])
    return table
