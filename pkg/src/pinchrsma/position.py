"""Antenna positioning for fixed powers by trust-region SCA.

The surrogate linearizes every |g_s(x)|^2 around the current layout and
takes the tangent of the subtracted interference log.  Wavelength-scale
phase rotation makes that model accurate only over a fraction of a
wavelength, so each step is confined to an l-infinity trust region and
accepted only when the exact sum rate improves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex import Infeasible, LinearConstraintSet, NumericalBreakdown, SolverConfig, find_feasible, maximize
from .geometry import Scenario, gains_sq, gains_sq_and_gradient
from .power import rebalance_split
from .rates import LN2, StreamModel


@dataclass
class PositionConfig:
    tol: float = 1e-4
    max_iter: int = 20
    radius0: float | None = None  # default wavelength / 4
    radius_min: float | None = None  # default wavelength / 100
    radius_max: float | None = None  # default 10 wavelengths
    shrink: float = 0.5
    grow: float = 1.5
    interference_floor: float | None = None  # default noise / 10
    # a 1e-7 duality gap is ample: steps are judged on the exact rate
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(gap_tol=1e-7))

    def radii(self, scenario: Scenario):
        lam = scenario.wavelength
        r0 = self.radius0 if self.radius0 is not None else lam / 4
        rmin = self.radius_min if self.radius_min is not None else lam / 100
        rmax = self.radius_max if self.radius_max is not None else 10 * lam
        return r0, rmin, rmax


@dataclass
class PositionSCAState:
    layout: np.ndarray
    radius: float
    exact_sum_rate: float
    model_value: float
    accepted: bool
    t: int
    bound_at_expansion: float = np.nan
    exact_at_expansion: float = np.nan


@dataclass
class PositionResult:
    layout: np.ndarray
    sum_rate: float
    trace: list
    newton_steps: int
    powers: np.ndarray | None = None  # stream powers after any split rebalancing

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def accepted(self) -> int:
        return sum(s.accepted for s in self.trace)


@dataclass
class Linearization:
    """Quantities of the interference/rate model frozen at ``x_t``."""

    x_t: np.ndarray
    interference: np.ndarray  # I_s^(t), shape (S,)
    total: np.ndarray  # I_s^(t) + p_s |g_s|^2
    interference_slope: np.ndarray  # (S, N)
    total_slope: np.ndarray  # (S, N)

    def interference_at(self, x):
        return self.interference + self.interference_slope @ (np.asarray(x) - self.x_t)

    def total_at(self, x):
        return self.total + self.total_slope @ (np.asarray(x) - self.x_t)


def linearize(x_t, powers, model: StreamModel, scenario: Scenario, users_xy) -> Linearization:
    x_t = np.asarray(x_t, dtype=float)
    g2, grad = gains_sq_and_gradient(scenario, users_xy, x_t)
    return linearize_from(x_t, powers, model, g2, grad, scenario.noise_power)


def linearize_from(x_t, powers, model, user_gain_sq, user_gradients, noise_power) -> Linearization:
    p = np.asarray(powers, dtype=float)
    gs = np.asarray(user_gain_sq)[model.owner]
    slopes = p[:, None] * np.asarray(user_gradients)[model.owner]
    K = model.interference
    received = p * gs
    interf = K @ received + noise_power
    A_I = K @ slopes
    return Linearization(np.asarray(x_t, float), interf, interf + received, A_I, A_I + slopes)


def linearized_interference(x, x_t, powers, model, user_gain_sq, user_gradients, noise_power):
    """Affine model of each stream's interference-plus-noise around ``x_t``."""
    return linearize_from(x_t, powers, model, user_gain_sq, user_gradients, noise_power).interference_at(x)


def position_lower_bound(x, lin: Linearization):
    """Surrogate sum rate at ``x`` and its gradient; tight at ``lin.x_t``."""
    x = np.asarray(x, dtype=float)
    total = lin.total_at(x)
    if np.any(total <= 0):
        raise NumericalBreakdown("linearized received power is not positive")
    interf = lin.interference_at(x)
    value = np.sum(np.log2(total) - np.log2(lin.interference) - (interf - lin.interference) / (LN2 * lin.interference))
    grad = lin.total_slope.T @ (1.0 / (LN2 * total)) - lin.interference_slope.T @ (1.0 / (LN2 * lin.interference))
    return float(value), grad


def _surrogate_objective(lin: Linearization):
    """Surrogate as a function of the displacement ``d = x - x_t``."""
    A_H = lin.total_slope
    lin_coef = lin.interference_slope.T @ (1.0 / (LN2 * lin.interference))
    const = np.sum(np.log2(lin.total) - np.log2(lin.interference))

    def fun(d):
        ratio = 1.0 + (A_H @ d) / lin.total
        total = lin.total * ratio
        w = 1.0 / (LN2 * total)
        value = np.sum(np.log2(ratio)) - lin_coef @ d + const
        grad = A_H.T @ w - lin_coef
        hess = -(A_H.T * (w / total)) @ A_H
        return float(value), grad, hess

    return fun


def _constraints(lin: Linearization, scenario: Scenario, min_gap, radius, floor):
    """Linear constraints on the displacement from ``lin.x_t``."""
    x_t = lin.x_t
    n = x_t.size
    lower = np.maximum(-x_t, -radius)
    upper = np.minimum(scenario.region_x - x_t, radius)
    rows, rhs = [], []
    if n > 1:
        chain = np.zeros((n - 1, n))
        idx = np.arange(n - 1)
        chain[idx, idx] = 1.0
        chain[idx, idx + 1] = -1.0
        rows.append(chain)
        rhs.append(np.diff(x_t) - min_gap)
    # affine interference / received power stay above the floor; rows scaled
    # by their value at x_t so slacks are relative
    for base, slope in ((lin.interference, lin.interference_slope), (lin.total, lin.total_slope)):
        active = np.any(slope != 0.0, axis=1)
        if np.any(active):
            b, A = base[active], slope[active]
            rows.append(-A / b[:, None])
            rhs.append((b - floor) / b)
    if rows:
        return LinearConstraintSet(np.vstack(rows), np.concatenate(rhs), lower=lower, upper=upper)
    return LinearConstraintSet(lower=lower, upper=upper)


def exact_sum_rate(x, powers, model, scenario, users_xy):
    return model.sum_rate(powers, gains_sq(scenario, users_xy, x), scenario.noise_power)


def exact_user_rates(x, powers, model, scenario, users_xy):
    g2 = gains_sq(scenario, users_xy, x)
    return model.user_rates(model.rates(powers, g2, scenario.noise_power))


def solve_positions(powers, model: StreamModel, scenario: Scenario, users_xy, x_init, min_gap,
                    config: PositionConfig | None = None, r_min: float = 0.0) -> PositionResult:
    """Trust-region SCA over antenna positions for fixed stream powers.

    When ``r_min > 0`` and the starting layout meets the minimum user rate,
    a step that would break it is accepted only if moving power between the
    sub-streams of split users restores it (leaving the sum rate unchanged);
    otherwise it is rejected.
    """
    config = config or PositionConfig()
    r0, rmin, rmax = config.radii(scenario)
    floor = config.interference_floor if config.interference_floor is not None else scenario.noise_power / 10
    users_xy = np.asarray(users_xy, dtype=float)
    p = np.asarray(powers, dtype=float)
    x = np.asarray(x_init, dtype=float).copy()
    rate = exact_sum_rate(x, p, model, scenario, users_xy)
    keep_rate_floor = r_min > 0 and np.all(exact_user_rates(x, p, model, scenario, users_xy) >= r_min - 1e-9)
    radius = r0
    trace = []
    steps = 0
    for t in range(config.max_iter):
        lin = linearize(x, p, model, scenario, users_xy)
        fun = _surrogate_objective(lin)
        cons = _constraints(lin, scenario, min_gap, radius, floor)
        # zero displacement, pushed inward for antennas on the region edge
        span = cons.upper - cons.lower
        start = np.clip(0.0, cons.lower + 0.25 * span, cons.upper - 0.25 * span)
        try:
            if not np.all(cons.slack(start) > 0):
                start = find_feasible(cons, config.solver, x0=start)
            res = maximize(fun, cons, config.solver, start)
        except (Infeasible, NumericalBreakdown):
            break
        steps += res.newton_steps
        cand = np.clip(np.sort(x + res.x), 0.0, scenario.region_x)
        cand_rate = exact_sum_rate(cand, p, model, scenario, users_xy)
        ok = cand_rate > rate
        p_cand = p
        if ok and keep_rate_floor and not np.all(exact_user_rates(cand, p, model, scenario, users_xy) >= r_min):
            p_cand = rebalance_split(p, model, gains_sq(scenario, users_xy, cand), scenario.noise_power, r_min)
            ok = p_cand is not None
        trace.append(PositionSCAState(cand, radius, cand_rate, res.value, bool(ok), t, fun(np.zeros_like(x))[0], rate))
        if ok:
            gain = cand_rate - rate
            if p_cand is not p:
                cand_rate = exact_sum_rate(cand, p_cand, model, scenario, users_xy)
            x, rate, p = cand, cand_rate, p_cand
            radius = min(radius * config.grow, rmax)
            if gain < config.tol:
                break
        else:
            radius *= config.shrink
            if radius < rmin:
                break
    return PositionResult(x, rate, trace, steps, p)
