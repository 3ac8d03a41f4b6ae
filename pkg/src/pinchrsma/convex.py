"""Log-barrier interior-point maximizer for small smooth concave programs.

Problems have the form::

    maximize    f(x)
    subject to  A x <= b,  lower <= x <= upper,  c(x) >= 0

where ``f`` and every component of ``c`` are concave.  Callbacks return
``(value, gradient)`` or ``(value, gradient, hessian)``; missing Hessians are
approximated by central differences of the gradient.  Concave constraints are
passed as one vector callback returning ``(values, jacobian[, hessians])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve


class Infeasible(Exception):
    """No strictly feasible point exists (within the feasibility tolerance)."""


class NumericalBreakdown(ArithmeticError):
    """The objective or a constraint evaluated to a non-finite number."""


@dataclass
class SolverConfig:
    t0: float = 1.0
    mu: float = 10.0
    newton_tol: float = 1e-8
    max_newton: int = 50
    feas_tol: float = 1e-9
    gap_tol: float = 1e-8
    max_outer: int = 40
    armijo_alpha: float = 0.25
    backtrack_beta: float = 0.5

    def __post_init__(self):
        if self.mu <= 1:
            raise ValueError("barrier growth mu must exceed 1")
        if min(self.newton_tol, self.feas_tol, self.gap_tol, self.t0) <= 0:
            raise ValueError("tolerances and t0 must be positive")


@dataclass
class LinearConstraintSet:
    """``A x <= b`` together with optional variable bounds."""

    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    num_vars: int | None = None
    _rows: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.num_vars
        for arr in (self.lower, self.upper):
            if arr is not None:
                n = np.size(arr)
        if self.A is not None:
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
            self.b = np.asarray(self.b, dtype=float).reshape(-1)
            n = self.A.shape[1]
            if self.A.shape[0] != self.b.size:
                raise ValueError("A and b row counts differ")
        if n is None:
            raise ValueError("cannot infer the number of variables")
        self.num_vars = int(n)
        mats = [] if self.A is None else [(self.A, self.b)]
        eye = np.eye(self.num_vars)
        if self.upper is not None:
            up = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,))
            keep = np.isfinite(up)
            mats.append((eye[keep], up[keep]))
        if self.lower is not None:
            lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,))
            keep = np.isfinite(lo)
            mats.append((-eye[keep], -lo[keep]))
        for m, v in mats:
            if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
                raise ValueError("constraint data must be finite")
        if mats:
            G = np.vstack([m for m, _ in mats])
            h = np.concatenate([v for _, v in mats])
        else:
            G, h = np.zeros((0, n)), np.zeros(0)
        self._rows = (G, h)

    @property
    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        return self._rows

    def slack(self, x) -> np.ndarray:
        G, h = self._rows
        return h - G @ x

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(self.slack(x) >= -tol))


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    converged: bool
    newton_steps: int
    outer_iterations: int
    history: list = field(default_factory=list)

    def __iter__(self):
        yield self.x
        yield self.value


def _fd_hessian(fun, x, h=1e-6):
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        H[:, i] = (fun(x + e)[1] - fun(x - e)[1]) / (2 * step)
    return 0.5 * (H + H.T)


def _eval(fun, x):
    out = fun(x)
    if len(out) == 3:
        return out
    value, grad = out
    return value, grad, _fd_hessian(fun, x)


def _eval_constraints(cons, x):
    out = cons(x)
    if len(out) == 3:
        return out
    values, jac = out
    n = x.size
    k = np.size(values)
    hess = np.empty((k, n, n))
    for i in range(n):
        step = 1e-6 * max(1.0, abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        hess[:, :, i] = (cons(x + e)[1] - cons(x - e)[1]) / (2 * step)
    return values, jac, 0.5 * (hess + hess.transpose(0, 2, 1))


class _Barrier:
    def __init__(self, objective, G, h, cons):
        self.objective = objective
        self.G = G
        self.h = h
        self.cons = cons

    def value(self, x, t):
        s = self.h - self.G @ x
        if np.any(s <= 0):
            return -np.inf, None
        f = self.objective(x)[0]
        phi = t * f + np.sum(np.log(s))
        if self.cons is not None:
            c = np.asarray(self.cons(x)[0])
            if np.any(c <= 0):
                return -np.inf, None
            phi += np.sum(np.log(c))
        return phi, f

    def derivatives(self, x, t):
        s = self.h - self.G @ x
        f, gf, Hf = _eval(self.objective, x)
        if not np.isfinite(f):
            raise NumericalBreakdown("non-finite objective")
        inv = 1.0 / s
        grad = t * np.asarray(gf, dtype=float) - self.G.T @ inv
        hess = t * np.asarray(Hf, dtype=float) - (self.G.T * inv**2) @ self.G
        phi = t * f + np.sum(np.log(s))
        if self.cons is not None:
            c, J, Hc = _eval_constraints(self.cons, x)
            c = np.atleast_1d(c)
            J = np.atleast_2d(J)
            ic = 1.0 / c
            grad = grad + J.T @ ic
            hess = hess + np.tensordot(ic, Hc, axes=1) - (J.T * ic**2) @ J
            phi += np.sum(np.log(c))
        return phi, f, grad, hess

    def max_step(self, x, d):
        Gd = self.G @ d
        pos = Gd > 0
        if not np.any(pos):
            return np.inf
        return float(np.min((self.h[pos] - self.G[pos] @ x) / Gd[pos]))


def _newton_direction(hess, grad):
    n = grad.size
    M = -hess
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        reg = 1e-12 * max(1.0, np.max(np.abs(np.diag(M))))
        for _ in range(12):
            try:
                L = np.linalg.cholesky(M + reg * np.eye(n))
                break
            except np.linalg.LinAlgError:
                reg *= 100
        else:
            return np.linalg.lstsq(M, grad, rcond=None)[0]
    return cho_solve((L, True), grad, check_finite=False)


def _center(barrier, x, t, config, stats):
    """Damped Newton on the barrier function at parameter ``t``."""
    for _ in range(config.max_newton):
        phi, f, grad, hess = barrier.derivatives(x, t)
        d = _newton_direction(hess, grad)
        lam2 = float(grad @ d)
        if not np.isfinite(lam2):
            raise NumericalBreakdown("non-finite Newton decrement")
        # second test: predicted gain is at the rounding level of phi
        if lam2 / 2.0 <= config.newton_tol or lam2 <= 1e-13 * abs(phi):
            return x, True
        tau = min(1.0, 0.99 * barrier.max_step(x, d))
        for _ in range(60):
            cand = x + tau * d
            phi_new, _ = barrier.value(cand, t)
            if phi_new >= phi + config.armijo_alpha * tau * lam2:
                break
            tau *= config.backtrack_beta
        else:
            # no representable ascent left: centred to machine precision
            return x, True
        x = cand
        stats["newton"] += 1
    return x, False


def maximize(objective: Callable, constraints: LinearConstraintSet, config: SolverConfig | None = None,
             start=None, concave_constraints: Callable | None = None) -> SolveResult:
    """Maximize a concave objective from a strictly feasible ``start``.

    The best feasible iterate is returned, so the result never scores below
    the start.  ``converged`` is False when an iteration cap was hit.
    """
    config = config or SolverConfig()
    G, h = constraints.rows
    x = np.array(start, dtype=float) if start is not None else find_feasible(
        constraints, config, concave_constraints=concave_constraints)
    if np.any(h - G @ x <= 0):
        raise ValueError("start point is not strictly feasible")
    if concave_constraints is not None and np.any(np.asarray(concave_constraints(x)[0]) <= 0):
        raise ValueError("start point violates a concave constraint")
    f0 = objective(x)[0]
    if not np.isfinite(f0):
        raise NumericalBreakdown("non-finite objective at start")

    barrier = _Barrier(objective, G, h, concave_constraints)
    m = G.shape[0] + (0 if concave_constraints is None else np.size(concave_constraints(x)[0]))
    best_x, best_f = x.copy(), float(f0)
    stats = {"newton": 0}
    history = []
    t = config.t0
    converged = False
    outer = 0
    while outer < config.max_outer:
        outer += 1
        x, centered = _center(barrier, x, t, config, stats)
        f = float(objective(x)[0])
        history.append(f)
        if f > best_f:
            best_x, best_f = x.copy(), f
        if m == 0 or m / t < config.gap_tol:
            converged = centered
            break
        t *= config.mu
    return SolveResult(best_x, best_f, converged, stats["newton"], outer, history)


def find_feasible(constraints: LinearConstraintSet, config: SolverConfig | None = None, x0=None,
                  concave_constraints: Callable | None = None, slack_cap: float = 1.0,
                  return_slack: bool = False, hard_linear: bool = False,
                  strict: bool = True):
    """Phase I: maximize the smallest constraint slack.

    Returns a point whose every slack exceeds ``config.feas_tol``; raises
    :class:`Infeasible` otherwise.  With ``hard_linear`` only the concave
    constraints are relaxed, which keeps their arguments inside the linear
    region (needed when they involve logarithms of the variables).  With
    ``strict=False`` the max-slack point is returned even when infeasible.
    """
    config = config or SolverConfig()
    G, h = constraints.rows
    n = constraints.num_vars
    if x0 is None:
        x0 = _default_start(constraints)
    x0 = np.asarray(x0, dtype=float)

    def min_slack(x):
        s = h - G @ x
        vals = [s] if s.size else []
        if concave_constraints is not None:
            vals.append(np.atleast_1d(concave_constraints(x)[0]))
        return float(np.min(np.concatenate(vals))) if vals else np.inf

    s0 = min_slack(x0)
    if not np.isfinite(s0):
        if np.isinf(s0) and s0 > 0:
            return (x0, np.inf) if return_slack else x0
        raise NumericalBreakdown("non-finite constraint value at phase-I start")

    if hard_linear and concave_constraints is not None:
        if np.any(h - G @ x0 <= config.feas_tol):
            x0 = find_feasible(constraints, config, x0=x0)
        s0 = float(np.min(np.atleast_1d(concave_constraints(x0)[0])))
        Gz = np.hstack([G, np.zeros((G.shape[0], 1))])
    else:
        Gz = np.hstack([G, np.ones((G.shape[0], 1))])
    hz = h
    if np.isfinite(slack_cap):
        cap_row = np.zeros((1, n + 1))
        cap_row[0, -1] = 1.0
        Gz = np.vstack([Gz, cap_row])
        hz = np.concatenate([h, [slack_cap]])
    lin = LinearConstraintSet(Gz, hz)

    def slack_objective(z):
        g = np.zeros(n + 1)
        g[-1] = 1.0
        return z[-1], g, np.zeros((n + 1, n + 1))

    shifted = None
    if concave_constraints is not None:
        def shifted(z):
            out = concave_constraints(z[:-1])
            vals = np.atleast_1d(out[0]) - z[-1]
            J = np.atleast_2d(out[1])
            Jz = np.hstack([J, -np.ones((J.shape[0], 1))])
            if len(out) == 3:
                Hc = np.asarray(out[2])
                Hz = np.zeros((Hc.shape[0], n + 1, n + 1))
                Hz[:, :n, :n] = Hc
                return vals, Jz, Hz
            return vals, Jz

    z0 = np.append(x0, min(s0, slack_cap) - max(1.0, abs(s0)))
    phase_cfg = SolverConfig(t0=config.t0, mu=config.mu, newton_tol=config.newton_tol,
                             max_newton=config.max_newton, feas_tol=config.feas_tol,
                             gap_tol=max(config.gap_tol, 1e-6), max_outer=config.max_outer)
    res = maximize(slack_objective, lin, phase_cfg, z0, shifted)
    x = res.x[:-1]
    best = min_slack(x)
    if strict and best <= config.feas_tol:
        raise Infeasible(f"maximum constraint slack {best:.3e} is not positive")
    return (x, best) if return_slack else x


def _default_start(constraints: LinearConstraintSet) -> np.ndarray:
    n = constraints.num_vars
    lo = np.full(n, -np.inf) if constraints.lower is None else np.broadcast_to(constraints.lower, (n,)).astype(float)
    up = np.full(n, np.inf) if constraints.upper is None else np.broadcast_to(constraints.upper, (n,)).astype(float)
    x = np.zeros(n)
    both = np.isfinite(lo) & np.isfinite(up)
    x[both] = 0.5 * (lo[both] + up[both])
    only_lo = np.isfinite(lo) & ~np.isfinite(up)
    x[only_lo] = lo[only_lo] + 1.0
    only_up = ~np.isfinite(lo) & np.isfinite(up)
    x[only_up] = up[only_up] - 1.0
    return x
