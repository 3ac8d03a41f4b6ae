"""Comparison schemes: NOMA, SDMA and discrete antenna activation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .ao import DEFAULT_P_MAX, DEFAULT_R_MIN, AOConfig, RunResult, run
from .geometry import Scenario
from .rates import Scheme

MAX_EXHAUSTIVE_SUBSETS = 5000


@dataclass(frozen=True)
class DiscreteGrid:
    """Pre-configured antenna positions and how many of them are switched on."""

    positions: tuple[float, ...]
    active: int

    def __post_init__(self):
        pos = tuple(sorted(float(p) for p in self.positions))
        object.__setattr__(self, "positions", pos)
        if not 1 <= self.active <= len(pos):
            raise ValueError("active set size must lie between 1 and the grid size")

    @property
    def size(self) -> int:
        return len(self.positions)

    def spacing_ok(self, min_gap: float) -> bool:
        return bool(np.all(np.diff(self.positions) >= min_gap - 1e-12))


def default_grid(scenario: Scenario, active: int | None = None) -> DiscreteGrid:
    """N uniformly spread positions; by default half of them are active."""
    n = scenario.num_antennas
    pos = np.linspace(0.0, scenario.region_x, n) if n > 1 else np.array([scenario.region_x / 2])
    return DiscreteGrid(tuple(pos), max(1, n // 2) if active is None else active)


def run_noma(scenario, users, config: AOConfig | None = None, **kw) -> RunResult:
    return run(scenario, users, Scheme.NOMA, config, **kw)


def run_sdma(scenario, users, config: AOConfig | None = None, **kw) -> RunResult:
    return run(scenario, users, Scheme.SDMA, config, **kw)


def _fixed(scenario, users, layout, config, scheme, r_min, p_max):
    sub = replace(scenario, num_antennas=len(layout))
    cfg = replace(config, fixed_positions=True, num_starts=1)
    return run(sub, users, scheme, cfg, r_min=r_min, p_max=p_max, layouts=[np.asarray(layout, float)])


def _better(a: RunResult | None, b: RunResult) -> bool:
    if a is None:
        return True
    if b.feasible != a.feasible:
        return b.feasible
    return b.feasible and b.sum_rate > a.sum_rate


def run_discrete(scenario: Scenario, users, config: AOConfig | None = None, grid: DiscreteGrid | None = None,
                 mode: str = "full", scheme=Scheme.RSMA, *, r_min: float = DEFAULT_R_MIN,
                 p_max=DEFAULT_P_MAX) -> RunResult:
    """Static antennas at grid points; only powers are optimized.

    ``mode="full"`` activates every grid point.  ``mode="selective"`` picks
    the ``grid.active``-subset with the highest optimized sum rate, by
    exhaustive search when there are at most 5000 subsets and by greedy
    forward selection otherwise.
    """
    config = config or AOConfig()
    grid = grid or default_grid(scenario)
    gap = config.gap(scenario)
    if not grid.spacing_ok(gap):
        raise ValueError("grid spacing is below the minimum antenna spacing")
    pos = np.asarray(grid.positions)
    if mode == "full":
        res = _fixed(scenario, users, pos, config, scheme, r_min, p_max)
        res.scheme = "discrete-full"
        return res
    if mode != "selective":
        raise ValueError(f"unknown discrete mode {mode!r}")

    best = None
    if math.comb(grid.size, grid.active) <= MAX_EXHAUSTIVE_SUBSETS:
        for idx in itertools.combinations(range(grid.size), grid.active):
            res = _fixed(scenario, users, pos[list(idx)], config, scheme, r_min, p_max)
            if _better(best, res):
                best = res
    else:
        chosen: list[int] = []
        while len(chosen) < grid.active:
            step_best, step_idx = None, None
            for i in range(grid.size):
                if i in chosen:
                    continue
                res = _fixed(scenario, users, pos[sorted(chosen + [i])], config, scheme, r_min, p_max)
                if _better(step_best, res):
                    step_best, step_idx = res, i
            chosen.append(step_idx)
            best = step_best
    best.scheme = "discrete-selective"
    return best
