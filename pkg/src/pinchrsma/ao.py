"""Alternating optimization of user powers and antenna positions.

Each outer iteration runs the power sub-solver at fixed positions and then
the position sub-solver at the new powers, stopping once the exact sum rate
improves by less than ``tol``.  Several initial layouts are tried and the
best feasible outcome is kept.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .convex import Infeasible
from .geometry import AntennaLayout, Scenario, dbm_to_watt, gains_sq, users_array
from .position import PositionConfig, solve_positions
from .power import SCAConfig, rate_feasible, solve_power
from .rates import DecodingOrder, PowerAllocation, Scheme, StreamModel, make_stream_set, order_by_gain

DEFAULT_P_MAX = dbm_to_watt(23.0)
DEFAULT_R_MIN = 0.7


class LayoutInfeasible(ValueError):
    """The antennas cannot fit in the region with the required spacing."""


@dataclass
class AOConfig:
    tol: float = 1e-3
    max_iter: int = 30
    num_starts: int = 5
    seed: int = 0
    min_gap: float | None = None  # default: half a wavelength
    fixed_positions: bool = False
    power: SCAConfig = field(default_factory=SCAConfig)
    position: PositionConfig = field(default_factory=PositionConfig)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.num_starts < 1:
            raise ValueError("num_starts must be >= 1")

    def gap(self, scenario: Scenario) -> float:
        return self.min_gap if self.min_gap is not None else scenario.wavelength / 2


@dataclass
class AOIteration:
    sum_rate: float
    user_rates: np.ndarray
    powers: np.ndarray
    layout: np.ndarray
    power_iterations: int
    position_iterations: int
    power_newton_steps: int
    position_newton_steps: int
    power_states: list = field(default_factory=list, repr=False)
    position_states: list = field(default_factory=list, repr=False)
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class AOTrace:
    iterations: list = field(default_factory=list)

    def __len__(self):
        return len(self.iterations)

    @property
    def sum_rates(self) -> np.ndarray:
        return np.array([it.sum_rate for it in self.iterations])


@dataclass
class RunResult:
    scheme: str
    feasible: bool
    sum_rate: float
    user_rates: np.ndarray
    stream_rates: dict
    powers: PowerAllocation | None
    layout: AntennaLayout | None
    order: DecodingOrder | None
    trace: AOTrace
    start_index: int = 0
    start_rates: list = field(default_factory=list)
    traces: list = field(default_factory=list, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.trace)


def uniform_layout(scenario: Scenario, num_antennas: int | None = None, min_gap: float = 0.0) -> np.ndarray:
    n = scenario.num_antennas if num_antennas is None else num_antennas
    if (n - 1) * min_gap > scenario.region_x:
        raise LayoutInfeasible(f"{n} antennas with spacing {min_gap} m do not fit in {scenario.region_x} m")
    if n == 1:
        return np.array([scenario.region_x / 2])
    return np.linspace(0.0, scenario.region_x, n)


def repair_layout(x, scenario: Scenario, min_gap: float) -> np.ndarray:
    """Project an arbitrary coordinate vector onto an ordered, spaced layout."""
    x = np.sort(np.clip(np.asarray(x, dtype=float), 0.0, scenario.region_x))
    n = x.size
    if (n - 1) * min_gap > scenario.region_x:
        raise LayoutInfeasible("layout cannot satisfy the spacing constraint")
    for i in range(1, n):
        x[i] = max(x[i], x[i - 1] + min_gap)
    x[-1] = min(x[-1], scenario.region_x)
    for i in range(n - 2, -1, -1):
        x[i] = min(x[i], x[i + 1] - min_gap)
    return np.clip(x, 0.0, scenario.region_x)


def envelope_layout(scenario: Scenario, users_xy, p_max, min_gap: float) -> np.ndarray:
    """Layout maximizing the phase-aligned channel envelope.

    Maximizes ``sum_m P_m (sum_n sqrt(eta)/D_mn)^2``, the value of
    ``sum_m P_m |g_m|^2`` if every antenna's contribution were co-phased.
    It ignores the wavelength-scale phase structure, so it is used only to
    seed the local phase-aware refinement.
    """
    users_xy = users_array(users_xy)
    n = scenario.num_antennas
    budgets = np.broadcast_to(np.asarray(p_max, float), (users_xy.shape[0],))
    ux, uy = users_xy[:, :1], users_xy[:, 1:]
    d2 = uy**2 + scenario.waveguide_height**2
    scale = scenario.region_x

    def neg_log_envelope(z):
        x = z * scale
        dist = np.sqrt((ux - x) ** 2 + d2)
        amp = np.sum(1.0 / dist, axis=1)
        val = budgets @ amp**2
        # d amp_m / dx_n = -(x_n - u_m) / D^3
        damp = -(x - ux) / dist**3
        grad = (2.0 * budgets * amp) @ damp
        return -np.log(val), -grad * scale / val

    cons = []
    if n > 1:
        A = np.zeros((n - 1, n))
        idx = np.arange(n - 1)
        A[idx, idx + 1] = 1.0
        A[idx, idx] = -1.0
        cons = [{"type": "ineq", "fun": lambda z: A @ z - min_gap / scale, "jac": lambda z: A}]

    seeds = [uniform_layout(scenario, n, min_gap)]
    # antennas assigned round-robin to users, placed at the users' x
    proj = np.sort(np.resize(np.sort(users_xy[:, 0]), n))
    seeds.append(repair_layout(proj, scenario, min_gap))
    best, best_val = None, np.inf
    for s in seeds:
        res = minimize(neg_log_envelope, s / scale, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                       constraints=cons, options={"maxiter": 200, "ftol": 1e-12})
        cand = repair_layout(res.x * scale, scenario, min_gap)
        val = neg_log_envelope(cand / scale)[0]
        if val < best_val:
            best, best_val = cand, val
    return best


def initial_powers(streams, p_max, num_users) -> PowerAllocation:
    """Each user's budget split evenly over its streams."""
    budgets = np.broadcast_to(np.asarray(p_max, float), (num_users,))
    counts = np.bincount([s.user for s in streams], minlength=num_users)
    return PowerAllocation(streams, [budgets[s.user] / counts[s.user] for s in streams])


def initial_layouts(scenario: Scenario, users_xy, rng: np.random.Generator, num_starts: int,
                    min_gap: float, p_max=DEFAULT_P_MAX) -> list[np.ndarray]:
    """Uniform spread first, then envelope-seeded and jittered variants."""
    base = uniform_layout(scenario, min_gap=min_gap)
    layouts = [base]
    if num_starts == 1:
        return layouts
    env = envelope_layout(scenario, users_xy, p_max, min_gap)
    layouts.append(env)
    spacing = scenario.region_x / max(scenario.num_antennas, 2)
    k = 0
    while len(layouts) < num_starts:
        if k % 2 == 0:
            jitter = rng.uniform(-1.0, 1.0, env.size)
            layouts.append(repair_layout(env + jitter, scenario, min_gap))
        else:
            jitter = rng.uniform(-spacing / 2, spacing / 2, base.size)
            layouts.append(repair_layout(base + jitter, scenario, min_gap))
        k += 1
    return layouts


def initialize(scenario: Scenario, users, scheme, rng: np.random.Generator | None = None,
               p_max=DEFAULT_P_MAX, min_gap: float | None = None):
    """Equal power split and uniformly spread antennas."""
    gap = scenario.wavelength / 2 if min_gap is None else min_gap
    streams, _ = make_stream_set(scheme, scenario.num_users)
    return initial_powers(streams, p_max, scenario.num_users), AntennaLayout(uniform_layout(scenario, min_gap=gap))


def _order_for(scheme: Scheme, streams, g2, default: DecodingOrder) -> DecodingOrder:
    if scheme is Scheme.NOMA:
        return order_by_gain(g2, scheme, streams)
    return default


def _run_from(scenario, users_xy, scheme, default_order, x0, config: AOConfig, r_min, p_max):
    gap = config.gap(scenario)
    noise = scenario.noise_power
    streams = list(default_order.order)
    p = initial_powers(streams, p_max, scenario.num_users).array(sorted(streams))
    x = np.asarray(x0, dtype=float)
    g2 = gains_sq(scenario, users_xy, x)
    order = _order_for(scheme, streams, g2, default_order)
    model = StreamModel(order, scenario.num_users)

    start_ok = rate_feasible(p, model, g2, noise, r_min, p_max)
    prev = model.sum_rate(p, g2, noise) if start_ok else -np.inf
    trace = AOTrace()
    retried = False
    t = 0
    while t < config.max_iter:
        tic = time.perf_counter()
        pos_pre = None
        try:
            pres = solve_power(g2, model, noise, r_min, p_max, p, config.power)
        except Infeasible:
            if t > 0 or retried or config.fixed_positions:
                return None, model, trace
            # one position pass at the initial powers may open up the rate region
            retried = True
            pos_pre = solve_positions(p, model, scenario, users_xy, x, gap, config.position)
            x = pos_pre.layout
            g2 = gains_sq(scenario, users_xy, x)
            model = StreamModel(_order_for(scheme, streams, g2, default_order), scenario.num_users)
            try:
                pres = solve_power(g2, model, noise, r_min, p_max, p, config.power)
            except Infeasible:
                return None, model, trace
        p = pres.powers
        pos_iters = pos_steps = 0
        pos_states = []
        if pos_pre is not None:
            pos_iters, pos_steps, pos_states = pos_pre.iterations, pos_pre.newton_steps, list(pos_pre.trace)
        if not config.fixed_positions:
            pos = solve_positions(p, model, scenario, users_xy, x, gap, config.position, r_min=r_min)
            x, p = pos.layout, pos.powers
            pos_iters += pos.iterations
            pos_steps += pos.newton_steps
            pos_states += pos.trace
            g2 = gains_sq(scenario, users_xy, x)
            if scheme is Scheme.NOMA:
                cand = StreamModel(order_by_gain(g2, scheme, streams), scenario.num_users)
                if rate_feasible(p, cand, g2, noise, r_min, p_max):
                    model = cand
        rates = model.rates(p, g2, noise)
        rate = float(rates.sum())
        trace.iterations.append(AOIteration(
            rate, model.user_rates(rates), p.copy(), x.copy(), pres.iterations, pos_iters,
            pres.newton_steps, pos_steps, list(pres.trace), pos_states, time.perf_counter() - tic))
        t += 1
        if config.fixed_positions or rate - prev < config.tol:
            break
        prev = rate
    return (p, x), model, trace


def run(scenario: Scenario, users, scheme=Scheme.RSMA, config: AOConfig | None = None, *,
        r_min: float = DEFAULT_R_MIN, p_max=DEFAULT_P_MAX, layouts=None) -> RunResult:
    """Multi-start alternating optimization for one user drop.

    ``layouts`` overrides the generated initial layouts (one run per entry).
    """
    config = config or AOConfig()
    scheme = Scheme(scheme)
    users_xy = users_array(users)
    streams, default_order = make_stream_set(scheme, scenario.num_users)
    gap = config.gap(scenario)
    if layouts is None:
        rng = np.random.default_rng(config.seed)
        layouts = initial_layouts(scenario, users_xy, rng, config.num_starts, gap, p_max)
    best = None
    start_rates, traces = [], []
    for k, x0 in enumerate(layouts):
        sol, model, trace = _run_from(scenario, users_xy, scheme, default_order, x0, config, r_min, p_max)
        traces.append(trace)
        if sol is None:
            start_rates.append(np.nan)
            continue
        rate = trace.iterations[-1].sum_rate
        start_rates.append(rate)
        if best is None or rate > best[0]:
            best = (rate, k, sol, model, trace)
    if best is None:
        nan_users = np.full(scenario.num_users, np.nan)
        return RunResult(scheme.value, False, np.nan, nan_users, {}, None, None, None,
                         traces[0] if traces else AOTrace(), 0, start_rates, traces)
    rate, k, (p, x), model, trace = best
    g2 = gains_sq(scenario, users_xy, x)
    r = model.rates(p, g2, scenario.noise_power)
    return RunResult(scheme.value, True, float(r.sum()), model.user_rates(r), dict(zip(model.streams, r.tolist())),
                     PowerAllocation(model.streams, p), AntennaLayout(x), model.order, trace, k, start_rates, traces)


def complexity_report(trace: AOTrace) -> dict:
    its = trace.iterations
    return {
        "ao_iterations": len(its),
        "power_sca_iterations": int(sum(it.power_iterations for it in its)),
        "position_sca_iterations": int(sum(it.position_iterations for it in its)),
        "power_newton_steps": int(sum(it.power_newton_steps for it in its)),
        "position_newton_steps": int(sum(it.position_newton_steps for it in its)),
        "wall_time": float(sum(it.wall_time for it in its)),
    }
