import numpy as np
import pytest

from pinchrsma.ao import AOConfig, run
from pinchrsma.baselines import DiscreteGrid, default_grid, run_discrete, run_noma, run_sdma
from pinchrsma.geometry import Scenario
from pinchrsma.rates import Scheme, StreamModel, make_stream_set

P = 0.19952623149688797
FAST = AOConfig(num_starts=2)


def users(seed, sc):
    return np.random.default_rng(seed).uniform(0, 1, (sc.num_users, 2)) * [sc.region_x, sc.region_y]


def test_single_user_schemes_coincide():
    sc = Scenario(region_x=20.0, region_y=20.0, num_antennas=2, num_users=1)
    u = users(0, sc)
    rates = [run(sc, u, s, FAST).sum_rate for s in ("rsma", "noma", "sdma")]
    assert max(rates) - min(rates) < 1e-9


def test_noma_equals_rsma_at_zero_rate_fixed_layout(scenario):
    u = users(1, scenario)
    cfg = AOConfig(fixed_positions=True)
    x = [np.linspace(0, 80, 6)]
    a = run(scenario, u, "rsma", cfg, r_min=0.0, layouts=x)
    b = run_noma(scenario, u, cfg, r_min=0.0, layouts=x)
    assert a.sum_rate == pytest.approx(b.sum_rate, abs=1e-6)
    c = run_sdma(scenario, u, cfg, r_min=0.0, layouts=x)
    assert c.sum_rate <= b.sum_rate


def test_sdma_equal_gains_rate_below_one():
    _, order = make_stream_set(Scheme.SDMA, 2)
    model = StreamModel(order, 2)
    g = np.array([1e-10, 1e-10])
    r = model.rates(np.array([P, P]), g, 1e-12)
    assert np.all(r < 1.0)
    assert np.allclose(r, np.log2(1 + P * 1e-10 / (P * 1e-10 + 1e-12)))
    assert r.sum() < np.log2(1 + 2 * P * 1e-10 / 1e-12)


def test_full_on_continuous_layout_matches(scenario):
    u = users(2, scenario)
    cont = run(scenario, u, "rsma", FAST)
    grid = DiscreteGrid(cont.layout.positions, len(cont.layout))
    full = run_discrete(scenario, u, FAST, grid, "full")
    assert full.sum_rate == pytest.approx(cont.sum_rate, abs=1e-6)


def test_selective_with_all_active_is_full(scenario):
    u = users(3, scenario)
    grid = default_grid(scenario, active=scenario.num_antennas)
    a = run_discrete(scenario, u, FAST, grid, "full")
    b = run_discrete(scenario, u, FAST, grid, "selective")
    assert a.sum_rate == b.sum_rate
    assert b.layout.positions == a.layout.positions


def test_selective_picks_best_subset(scenario):
    u = users(4, scenario)
    grid = default_grid(scenario, active=2)
    best = run_discrete(scenario, u, FAST, grid, "selective")
    assert len(best.layout) == 2
    pos = np.asarray(grid.positions)
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            sub = DiscreteGrid((pos[i], pos[j]), 2)
            other = run_discrete(scenario, u, FAST, sub, "full")
            if other.feasible:
                assert best.sum_rate >= other.sum_rate - 1e-12


def test_grid_validation(scenario):
    with pytest.raises(ValueError):
        DiscreteGrid((0.0, 1.0), 3)
    with pytest.raises(ValueError):
        run_discrete(scenario, users(0, scenario), FAST, DiscreteGrid((0.0, 1e-4), 1), "full")
    assert default_grid(scenario).active == 3


def test_discrete_outputs_feasible(scenario):
    u = users(5, scenario)
    for mode in ("full", "selective"):
        res = run_discrete(scenario, u, FAST, mode=mode)
        assert res.feasible
        assert res.powers.satisfies_budget(P)
        assert np.all(res.user_rates >= 0.7 - 1e-9)
