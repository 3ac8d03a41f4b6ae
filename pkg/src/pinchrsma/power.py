"""Power allocation for fixed antenna positions by successive convex approximation.

Each stream rate is written as a difference of two concave logs; the
subtracted interference log is replaced by its tangent at the current
iterate, which gives a concave global lower bound that is tight there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .convex import Infeasible, LinearConstraintSet, SolverConfig, find_feasible, maximize
from .rates import LN2, StreamModel


@dataclass
class SCAConfig:
    tol: float = 1e-4
    max_iter: int = 20
    per_stream_rate: bool = False
    # a 1e-7 duality gap is ample: steps are judged on the exact rate
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(gap_tol=1e-7))


@dataclass
class PowerSCAState:
    iterate: np.ndarray
    lower_bound: float
    exact_sum_rate: float
    t: int
    # surrogate and exact objective at the expansion point (equal by construction)
    bound_at_expansion: float = np.nan
    exact_at_expansion: float = np.nan
    accepted: bool = True


@dataclass
class PowerResult:
    powers: np.ndarray
    sum_rate: float
    trace: list
    newton_steps: int
    iterations: int = 0


def rs_lower_bound(p, p_t, model: StreamModel, user_gain_sq, noise_power):
    """Per-stream concave lower bound of the rate and its Jacobian in ``p``.

    Returns ``(values, jacobian)`` with shapes (S,) and (S, S).
    """
    values, jac, _ = _bound_terms(np.asarray(p, float), np.asarray(p_t, float), model,
                                  model.stream_gains(user_gain_sq), noise_power)
    return values, jac


def _bound_terms(p, p_t, model, gs, noise_power):
    K = model.interference
    T = K + np.eye(model.num_streams)
    # rows of C / D are coefficient vectors of the total / interference affine terms
    C = T * gs[None, :]
    D = K * gs[None, :]
    interf_t = D @ p_t + noise_power
    total = C @ p + noise_power
    lin = D / (LN2 * interf_t[:, None])
    values = np.log2(total) - np.log2(interf_t) - lin @ (p - p_t)
    jac = C / (LN2 * total[:, None]) - lin
    return values, jac, total


def _surrogate(p_t, model, gs, noise_power):
    K = model.interference
    C = (K + np.eye(model.num_streams)) * gs[None, :]
    D = K * gs[None, :]
    interf_t = D @ p_t + noise_power
    lin = D / (LN2 * interf_t[:, None])
    const = -np.log2(interf_t) + lin @ p_t

    def per_stream(p):
        total = C @ p + noise_power
        return np.log2(total) - lin @ p + const, total

    return C, lin, per_stream


def _objective(p_t, model, gs, noise_power):
    C, lin, per_stream = _surrogate(p_t, model, gs, noise_power)
    lin_sum = lin.sum(axis=0)

    def fun(p):
        vals, total = per_stream(p)
        w = 1.0 / (LN2 * total)
        grad = C.T @ w - lin_sum
        hess = -(C.T * (w / total)) @ C
        return float(vals.sum()), grad, hess

    return fun


def _rate_constraints(p_t, model, gs, noise_power, r_min, per_stream_rate):
    """Concave constraints ``sum_j R^lw_{m,j}(p) - R_min >= 0`` (or per stream)."""
    C, lin, per_stream = _surrogate(p_t, model, gs, noise_power)
    agg = np.eye(model.num_streams) if per_stream_rate else model.ownership

    def cons(p):
        vals, total = per_stream(p)
        w = 1.0 / (LN2 * total)
        jac_s = C * w[:, None] - lin
        hess_s = -np.einsum("s,si,sj->sij", w / total, C, C)
        return agg @ vals - r_min, agg @ jac_s, np.tensordot(agg, hess_s, axes=1)

    return cons


def _budget_constraints(model: StreamModel, p_max):
    budgets = np.broadcast_to(np.asarray(p_max, dtype=float), (model.num_users,))
    return LinearConstraintSet(model.ownership, budgets.copy(), lower=np.zeros(model.num_streams))


def exact_user_rates(p, model, user_gain_sq, noise_power):
    return model.user_rates(model.rates(p, user_gain_sq, noise_power))


def rate_feasible(p, model, user_gain_sq, noise_power, r_min, p_max, per_stream_rate=False, tol=1e-9):
    p = np.asarray(p, float)
    budgets = np.broadcast_to(np.asarray(p_max, dtype=float), (model.num_users,))
    if np.any(p < -tol) or np.any(model.ownership @ p > budgets * (1 + 1e-12) + tol):
        return False
    if r_min <= 0:
        return True
    r = model.rates(p, user_gain_sq, noise_power)
    got = r if per_stream_rate else model.user_rates(r)
    return bool(np.all(got >= r_min - tol))


def _interior_start(lin, cons, p, config):
    if np.all(lin.slack(p) > config.feas_tol) and (cons is None or np.all(cons(p)[0] > 0)):
        return p
    return find_feasible(lin, config, x0=p, concave_constraints=cons, hard_linear=True)


def _min_slack(p, model, user_gain_sq, noise_power, r_min, per_stream_rate):
    r = model.rates(p, user_gain_sq, noise_power)
    got = r if per_stream_rate else model.user_rates(r)
    return float(np.min(got - r_min))


def structured_candidates(model: StreamModel, p_max) -> np.ndarray:
    """Power vectors from per-user budget levels and split shares.

    Each user transmits at 1, 0.1 or 0.01 of its budget; a split user puts
    its power entirely in one sub-stream or shares it evenly.  Because the
    split streams sit at both ends of the decoding order, these points
    include every NOMA-like ordering of the users.
    """
    budgets = np.broadcast_to(np.asarray(p_max, dtype=float), (model.num_users,))
    levels = (1.0, 0.1, 0.01)
    per_user = []
    for m in range(model.num_users):
        idx = np.flatnonzero(model.ownership[m])
        shares = [np.ones(1)] if idx.size == 1 else [np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                                                    np.array([0.5, 0.5])]
        per_user.append([(idx, lv * budgets[m] * sh) for lv in levels for sh in shares])
    out = []
    for combo in itertools.product(*per_user):
        p = np.zeros(model.num_streams)
        for idx, vals in combo:
            p[idx] = vals
        out.append(p)
    return np.array(out)


def rebalance_split(p, model: StreamModel, user_gain_sq, noise_power, r_min, per_stream_rate=False):
    """Move power between each split user's sub-streams to restore the minimum rates.

    Per-user totals are kept, so under SIC the sum rate is unchanged.  The
    share of every split user is searched on a grid and the point with the
    largest worst-case rate margin is returned, or ``None`` if no grid point
    meets the minimum rates.
    """
    p = np.asarray(p, dtype=float)
    split = [np.flatnonzero(row) for row in model.ownership if np.count_nonzero(row) == 2]
    if not split:
        return None
    per_axis = {1: 201, 2: 41}.get(len(split), 11)
    fracs = np.linspace(0.0, 1.0, per_axis)
    grid = np.array(list(itertools.product(fracs, repeat=len(split))))
    cand = np.repeat(p[None, :], grid.shape[0], axis=0)
    for k, idx in enumerate(split):
        total = p[idx].sum()
        cand[:, idx[0]] = grid[:, k] * total
        cand[:, idx[1]] = (1.0 - grid[:, k]) * total
    received = cand * model.stream_gains(user_gain_sq)[None, :]
    rates = np.log2(1.0 + received / (received @ model.interference.T + noise_power))
    got = rates if per_stream_rate else rates @ model.ownership.T
    margin = np.min(got - r_min, axis=1)
    k = int(np.argmax(margin))
    return cand[k] if margin[k] >= 0 else None


def _restore_feasibility(p, model, gs, noise_power, r_min, lin, sca: SCAConfig, user_gain_sq=None, p_max=None):
    """Exact search over structured candidates, then SCA on the max-min rate slack."""
    if user_gain_sq is not None:
        cands = np.vstack([p[None, :], structured_candidates(model, p_max)])
        slacks = [_min_slack(c, model, user_gain_sq, noise_power, r_min, sca.per_stream_rate) for c in cands]
        k = int(np.argmax(slacks))
        p = cands[k]
        if slacks[k] > 0:
            return p
    best = -np.inf
    for _ in range(sca.max_iter):
        cons = _rate_constraints(p, model, gs, noise_power, r_min, sca.per_stream_rate)
        p_new, slack = find_feasible(lin, sca.solver, x0=p, concave_constraints=cons, slack_cap=np.inf,
                                     return_slack=True, hard_linear=True, strict=False)
        if slack > sca.solver.feas_tol:
            return p_new
        if slack <= best + 1e-10:
            break
        best, p = slack, p_new
    raise Infeasible("minimum-rate constraints cannot be met at these channel gains")


def _interior_power(lin):
    # half of every budget split evenly across the owner's streams
    G, h = lin.rows
    n = lin.num_vars
    ownership = G[: (G.shape[0] - n)]
    budgets = h[: ownership.shape[0]]
    counts = ownership.sum(axis=1)
    share = 0.5 * budgets / counts
    return ownership.T @ share


def solve_power(user_gain_sq, model: StreamModel, noise_power, r_min, p_max, p_init, sca: SCAConfig | None = None):
    """Maximize the exact sum rate over powers for fixed channel gains.

    Raises :class:`Infeasible` when the minimum-rate constraints cannot be
    satisfied.  The returned powers meet the minimum rate with exact rates,
    since every SCA constraint is a lower bound of the exact rate.
    """
    sca = sca or SCAConfig()
    gs = model.stream_gains(user_gain_sq)
    lin = _budget_constraints(model, p_max)
    p = np.clip(np.asarray(p_init, dtype=float), 0.0, None)
    steps = 0
    if not rate_feasible(p, model, user_gain_sq, noise_power, r_min, p_max, sca.per_stream_rate):
        if r_min > 0:
            p = _restore_feasibility(p, model, gs, noise_power, r_min, lin, sca, user_gain_sq, p_max)
        else:
            p = _interior_power(lin)

    rate = model.sum_rate(p, user_gain_sq, noise_power)
    trace = []
    iterations = 0
    for t in range(sca.max_iter):
        fun = _objective(p, model, gs, noise_power)
        cons = None
        if r_min > 0:
            cons = _rate_constraints(p, model, gs, noise_power, r_min, sca.per_stream_rate)
        lower_at_t = fun(p)[0]
        try:
            start = _interior_start(lin, cons, p, sca.solver)
        except Infeasible:
            break
        res = maximize(fun, lin, sca.solver, start, cons)
        iterations += 1
        steps += res.newton_steps
        p_new = np.clip(res.x, 0.0, None)
        new_rate = model.sum_rate(p_new, user_gain_sq, noise_power)
        state = PowerSCAState(p_new.copy(), res.value, new_rate, t, lower_at_t, rate)
        if new_rate < rate or not rate_feasible(p_new, model, user_gain_sq, noise_power, r_min, p_max,
                                                sca.per_stream_rate):
            state.accepted = False
            trace.append(state)
            break
        gain = new_rate - rate
        trace.append(state)
        p, rate = p_new, new_rate
        if gain < sca.tol:
            break
    return PowerResult(p, rate, trace, steps, iterations)
