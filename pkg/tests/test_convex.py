import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinchrsma.convex import Infeasible, LinearConstraintSet, SolverConfig, find_feasible, maximize


def box(n, lo=0.0, hi=1.0):
    return LinearConstraintSet(np.zeros((0, n)), np.zeros(0), lower=np.full(n, lo), upper=np.full(n, hi))


def test_feasible_box_center():
    x = find_feasible(box(1))
    assert np.min(box(1).slack(x)) >= 0.4


def test_contradiction_is_infeasible():
    cons = LinearConstraintSet(np.array([[1.0], [-1.0]]), np.array([0.0, -1.0]))
    with pytest.raises(Infeasible):
        find_feasible(cons)


def test_power_simplex_interior():
    cons = LinearConstraintSet(np.ones((1, 2)), np.array([0.2]), lower=np.zeros(2))
    x = find_feasible(cons)
    assert np.all(x > 0) and x.sum() < 0.2


def test_interior_quadratic():
    res = maximize(lambda x: (-(x[0] - 0.3) ** 2, np.array([-2 * (x[0] - 0.3)])), box(1), start=[0.5])
    assert res.x[0] == pytest.approx(0.3, abs=1e-6)


def test_monotone_hits_boundary():
    P = 2.0
    cons = LinearConstraintSet(np.ones((1, 1)), np.array([P]), lower=np.zeros(1))
    f = lambda x: (np.log2(1 + x[0]), np.array([1 / ((1 + x[0]) * np.log(2))]))
    x, _ = maximize(f, cons, start=[1.0])
    assert x[0] == pytest.approx(P, abs=1e-6)


def test_water_filling_against_grid():
    cons = LinearConstraintSet(np.ones((1, 2)), np.array([1.0]), lower=np.zeros(2))

    def f(x):
        v = np.log2(1 + x[0]) + np.log2(1 + 4 * x[1])
        g = np.array([1 / (1 + x[0]), 4 / (1 + 4 * x[1])]) / np.log(2)
        return v, g

    _, val = maximize(f, cons, start=[0.3, 0.3])
    grid = np.arange(0, 1 + 1e-12, 1e-4)
    brute = np.max(np.log2(1 + grid) + np.log2(1 + 4 * (1 - grid)))
    assert val == pytest.approx(brute, abs=1e-3)
    assert val >= brute - 1e-9


def test_history_monotone_and_feasible():
    cons = LinearConstraintSet(np.array([[1.0, 2.0]]), np.array([1.0]), lower=np.zeros(2))
    f = lambda x: (np.log(1 + x[0]) + np.log(1 + x[1]), np.array([1 / (1 + x[0]), 1 / (1 + x[1])]))
    res = maximize(f, cons, start=[0.1, 0.1])
    assert np.all(np.diff(res.history) >= -1e-12)
    assert cons.is_feasible(res.x)
    assert res.value >= f([0.1, 0.1])[0] - 1e-12


def test_hessian_finite_difference_fallback():
    # gradient-only callback and its analytic-Hessian twin agree
    f2 = lambda x: (-(x[0] - 0.2) ** 2 - 3 * (x[1] - 0.7) ** 2, np.array([-2 * (x[0] - 0.2), -6 * (x[1] - 0.7)]))
    f3 = lambda x: (*f2(x), np.diag([-2.0, -6.0]))
    a = maximize(f2, box(2), start=[0.5, 0.5]).x
    b = maximize(f3, box(2), start=[0.5, 0.5]).x
    assert np.allclose(a, b, atol=1e-7)


def test_concave_constraint():
    # maximize x0 + x1 subject to 1 - x0^2 - x1^2 >= 0
    cons = lambda x: (np.array([1 - x @ x]), -2 * x[None, :], -2 * np.eye(2)[None])
    f = lambda x: (x.sum(), np.ones(2), np.zeros((2, 2)))
    x, _ = maximize(f, box(2, -2, 2), start=[0.0, 0.0], concave_constraints=cons)
    assert np.allclose(x, [np.sqrt(0.5)] * 2, atol=1e-6)


def test_bad_config():
    with pytest.raises(ValueError):
        SolverConfig(mu=1.0)


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=3), st.lists(st.floats(0.0, 1.0), min_size=3,
                                                                        max_size=3))
def test_random_concave_matches_grid(weights, centres):
    n = len(weights)
    w, c = np.asarray(weights), np.asarray(centres[:n])

    def f(x):
        return float(-np.sum(w * (x - c) ** 2) + np.sum(np.log(1 + x))), -2 * w * (x - c) + 1 / (1 + x)

    res = maximize(f, box(n), start=np.full(n, 0.5))
    axes = np.meshgrid(*[np.linspace(0, 1, 201)] * n, indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    brute = np.max(-((pts - c) ** 2 * w).sum(axis=1) + np.log(1 + pts).sum(axis=1))
    assert res.value >= brute - 1e-4
    assert box(n).is_feasible(res.x)
