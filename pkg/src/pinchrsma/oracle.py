"""Brute-force reference optimizer for small instances.

Evaluates exact rates on a Cartesian grid of antenna layouts and per-stream
power levels; no approximation is involved beyond the grid itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ao import DEFAULT_P_MAX, DEFAULT_R_MIN
from .geometry import Scenario, gain_terms, users_array
from .rates import DecodingOrder, Scheme, StreamModel, make_stream_set

MAX_GRID_POINTS = 10**7
MAX_ORDER_STREAMS = 7


class GridTooLarge(ValueError):
    pass


class TooManyStreams(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    position_step: float
    power_levels: int
    orders: str = "default"  # or "exhaustive"

    def __post_init__(self):
        if self.position_step <= 0:
            raise ValueError("position_step must be positive")
        if self.power_levels < 2:
            raise ValueError("need at least two power levels")
        if self.orders not in ("default", "exhaustive"):
            raise ValueError("orders must be 'default' or 'exhaustive'")


@dataclass
class OracleResult:
    powers: np.ndarray | None
    layout: np.ndarray | None
    sum_rate: float
    order: DecodingOrder | None
    evaluated: int

    @property
    def feasible(self) -> bool:
        return self.layout is not None


def candidate_layouts(scenario: Scenario, step: float, num_antennas: int, min_gap: float) -> np.ndarray:
    pts = np.arange(0.0, scenario.region_x + step / 2, step)
    pts = pts[pts <= scenario.region_x + 1e-9]
    combos = np.array(list(itertools.combinations(range(pts.size), num_antennas)), dtype=int).reshape(-1, num_antennas)
    layouts = pts[combos]
    if num_antennas > 1:
        layouts = layouts[np.all(np.diff(layouts, axis=1) >= min_gap - 1e-12, axis=1)]
    return layouts


def count_layouts(scenario: Scenario, step: float, num_antennas: int, min_gap: float) -> int:
    """Number of ascending layouts on the grid, without enumerating them."""
    points = int(np.floor(scenario.region_x / step + 1e-9)) + 1
    skip = max(1, int(np.ceil(min_gap / step - 1e-12)))
    return math.comb(max(0, points - (skip - 1) * (num_antennas - 1)), num_antennas)


def power_grid(streams, p_max, levels: int, num_users: int) -> np.ndarray:
    budgets = np.broadcast_to(np.asarray(p_max, float), (num_users,))
    axes = [np.linspace(0.0, budgets[s.user], levels) for s in streams]
    grid = np.array(list(itertools.product(*axes)))
    owner = np.array([s.user for s in streams])
    per_user = np.zeros((grid.shape[0], num_users))
    for j, m in enumerate(owner):
        per_user[:, m] += grid[:, j]
    keep = np.all(per_user <= budgets * (1 + 1e-12), axis=1)
    return grid[keep]


def _orders(scheme: Scheme, streams, default: DecodingOrder, mode: str):
    if mode == "default" or scheme is Scheme.SDMA:
        return [default]
    if len(streams) > MAX_ORDER_STREAMS:
        raise TooManyStreams(f"{len(streams)} streams exceed the {MAX_ORDER_STREAMS}-stream limit")
    return [DecodingOrder(perm, scheme) for perm in itertools.permutations(sorted(streams))]


def _many_gains_sq(scenario, users_xy, layouts):
    """|g_m|^2 for a batch of layouts, shape (L, M)."""
    out = np.empty((layouts.shape[0], users_xy.shape[0]))
    for i in range(0, layouts.shape[0], 4096):
        g = _terms_batch(scenario, users_xy, layouts[i:i + 4096]).sum(axis=2)
        out[i:i + g.shape[0]] = g.real**2 + g.imag**2
    return out


def _terms_batch(scenario, users_xy, layouts):
    ux = users_xy[None, :, 0:1]
    uy = users_xy[None, :, 1:2]
    x = layouts[:, None, :]
    dist = np.sqrt((ux - x) ** 2 + uy**2 + scenario.waveguide_height**2)
    k = 2 * np.pi / scenario.wavelength
    kg = 2 * np.pi / scenario.guided_wavelength
    phase = k * dist - kg * np.abs(x - scenario.feed_x)
    return np.sqrt(scenario.eta) / dist * np.exp(1j * phase)


def grid_optimize(scenario: Scenario, users, scheme=Scheme.RSMA, grid: GridSpec = GridSpec(0.25, 11), *,
                  r_min: float = DEFAULT_R_MIN, p_max=DEFAULT_P_MAX, min_gap: float | None = None) -> OracleResult:
    """Exhaustive search over the layout and power grids.

    Ties are resolved toward the first point in enumeration order, so the
    result does not depend on evaluation chunking.
    """
    scheme = Scheme(scheme)
    users_xy = users_array(users)
    gap = scenario.wavelength / 2 if min_gap is None else min_gap
    streams, default = make_stream_set(scheme, scenario.num_users)
    orders = _orders(scheme, streams, default, grid.orders)
    streams = sorted(streams)
    if grid.power_levels ** len(streams) > MAX_GRID_POINTS:
        raise GridTooLarge("power grid alone exceeds the grid-point limit")
    powers = power_grid(streams, p_max, grid.power_levels, scenario.num_users)
    total = count_layouts(scenario, grid.position_step, scenario.num_antennas, gap) * powers.shape[0] * len(orders)
    if total > MAX_GRID_POINTS:
        raise GridTooLarge(f"{total} grid points exceed the limit of {MAX_GRID_POINTS}")
    layouts = candidate_layouts(scenario, grid.position_step, scenario.num_antennas, gap)

    g2 = _many_gains_sq(scenario, users_xy, layouts)
    best = (-np.inf, None, None, None)
    chunk = max(1, 2_000_000 // max(1, powers.shape[0] * len(streams)))
    for order in orders:
        model = StreamModel(order, scenario.num_users)
        K = model.interference
        for i in range(0, layouts.shape[0], chunk):
            gs = g2[i:i + chunk][:, model.owner]  # (L, S)
            received = powers[None, :, :] * gs[:, None, :]  # (L, P, S)
            interf = received @ K.T + scenario.noise_power
            rates = np.log2(1.0 + received / interf)
            total_rate = rates.sum(axis=2)
            if r_min > 0:
                user = rates @ model.ownership.T
                total_rate = np.where(np.all(user >= r_min, axis=2), total_rate, -np.inf)
            flat = int(np.argmax(total_rate))
            val = total_rate.flat[flat]
            if val > best[0]:
                li, pi = np.unravel_index(flat, total_rate.shape)
                best = (float(val), layouts[i + li].copy(), powers[pi].copy(), order)
    val, layout, p, order = best
    if layout is None:
        return OracleResult(None, None, np.nan, None, total)
    return OracleResult(p, layout, val, order, total)


@dataclass
class OrderSearch:
    order: DecodingOrder
    sum_rate: float
    per_order: list  # (order, per-user rates, sum rate, feasible)
    per_user_spread: np.ndarray


def exhaustive_orders(scenario: Scenario, users, powers, layout, scheme=Scheme.RSMA, *,
                      r_min: float = 0.0) -> OrderSearch:
    """Best SIC order for fixed powers and layout, first permutation wins ties."""
    scheme = Scheme(scheme)
    users_xy = users_array(users)
    streams, default = make_stream_set(scheme, scenario.num_users)
    if len(streams) > MAX_ORDER_STREAMS:
        raise TooManyStreams(f"{len(streams)} streams exceed the {MAX_ORDER_STREAMS}-stream limit")
    layout = np.asarray(getattr(layout, "positions", layout), float)
    g = _terms_batch(scenario, users_xy, layout[None, :])[0].sum(axis=1)
    g2 = g.real**2 + g.imag**2
    p = np.asarray(getattr(powers, "values", powers), float)
    orders = [default] if scheme is Scheme.SDMA else [
        DecodingOrder(perm, scheme) for perm in itertools.permutations(sorted(streams))]
    table = []
    best = None
    for order in orders:
        model = StreamModel(order, scenario.num_users)
        r = model.rates(p, g2, scenario.noise_power)
        user = model.user_rates(r)
        ok = bool(np.all(user >= r_min - 1e-12))
        s = float(r.sum())
        table.append((order, user, s, ok))
        if ok and (best is None or s > best[1] + 1e-12):
            best = (order, s)
    if best is None:
        best = (orders[0], np.nan)
    users_mat = np.array([row[1] for row in table])
    spread = users_mat.max(axis=0) - users_mat.min(axis=0)
    return OrderSearch(best[0], best[1], table, spread)
