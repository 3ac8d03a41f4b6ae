import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinchrsma.geometry import (
    SPEED_OF_LIGHT, AntennaLayout, Scenario, UserPosition, dbm_to_watt, effective_gain, free_space_vector,
    gain_sq_gradient, gains_sq, gains_sq_and_gradient, waveguide_vector,
)


def test_dbm_conversions():
    assert dbm_to_watt(23) == pytest.approx(0.19952623, rel=1e-7)
    assert dbm_to_watt(-90) == pytest.approx(1e-12, rel=1e-12)


def test_eta_closed_form(scenario):
    expected = SPEED_OF_LIGHT**2 / (16 * np.pi**2 * 28e9**2)
    assert scenario.eta == pytest.approx(expected, rel=1e-15)
    assert scenario.guided_wavelength == pytest.approx(scenario.wavelength / 1.4)


def test_overhead_single_antenna(scenario):
    g = effective_gain(scenario, UserPosition(0.0, 0.0), AntennaLayout([0.0]))
    d = scenario.waveguide_height
    oracle = np.sqrt(scenario.eta) / d * np.exp(1j * 2 * np.pi * d / scenario.wavelength)
    assert abs(g.value - oracle) < 1e-15
    assert abs(g.value) == pytest.approx(np.sqrt(scenario.eta) / d, rel=1e-12)


def test_free_space_phase_identity(scenario):
    user = UserPosition(12.3, 45.6)
    layout = AntennaLayout([1.0, 20.0, 70.0])
    h = free_space_vector(scenario, user, layout)
    dist = np.sqrt((user.x - layout.as_array()) ** 2 + user.y**2 + scenario.waveguide_height**2)
    phase = -2 * np.pi / scenario.wavelength * dist
    assert np.allclose(np.angle(h * np.exp(-1j * phase)), 0.0, atol=1e-6)
    assert np.allclose(np.abs(h), np.sqrt(scenario.eta) / dist, rtol=1e-14)


def test_mirrored_users_match(scenario):
    layout = AntennaLayout([10.0])
    a = free_space_vector(scenario, UserPosition(7.0, 5.0), layout)
    b = free_space_vector(scenario, UserPosition(13.0, 5.0), layout)
    assert np.allclose(a, b)


@pytest.mark.parametrize("offset, expected", [(0.0, 1.0), (1.0, 1.0), (0.5, -1.0)])
def test_waveguide_phase_wrap(scenario, offset, expected):
    x = offset * scenario.guided_wavelength
    w = waveguide_vector(scenario, AntennaLayout([x]))[0]
    assert abs(w - expected) < 1e-9


def test_doubling_height_quarters_gain():
    a = Scenario(waveguide_height=3.0)
    b = Scenario(waveguide_height=6.0)
    ga = effective_gain(a, UserPosition(0.0, 0.0), AntennaLayout([0.0])).power
    gb = effective_gain(b, UserPosition(0.0, 0.0), AntennaLayout([0.0])).power
    assert gb == pytest.approx(ga / 4, rel=1e-12)


def test_destructive_pair_cancels(scenario):
    # two antennas equidistant from the user, waveguide phases differing by pi
    half = scenario.guided_wavelength / 2
    x1 = 10.0
    x2 = x1 + half
    user = UserPosition((x1 + x2) / 2, 4.0)
    g = effective_gain(scenario, user, AntennaLayout([x1, x2]))
    assert abs(g.value) < 1e-12 * np.abs(g.per_antenna_terms).sum()


def test_gradient_finite_difference(rng, scenario):
    for _ in range(20):
        user = UserPosition(*rng.uniform(0, 80, 2))
        x = np.sort(rng.uniform(0.5, 79.5, 4))
        grad = gain_sq_gradient(scenario, user, AntennaLayout(x))
        h = 1e-6
        fd = np.array([
            (gains_sq(scenario, [[user.x, user.y]], x + h * e)[0]
             - gains_sq(scenario, [[user.x, user.y]], x - h * e)[0]) / (2 * h)
            for e in np.eye(4)])
        assert np.max(np.abs(grad - fd)) <= 1e-5 * np.max(np.abs(fd))


def test_moving_toward_user_raises_magnitude(scenario):
    # single antenna, phase removed by looking at the magnitude law only
    user = UserPosition(30.0, 0.0)
    near = effective_gain(scenario, user, AntennaLayout([29.0])).power
    far = effective_gain(scenario, user, AntennaLayout([25.0])).power
    assert near > far


def test_stationary_single_antenna_under_user(scenario):
    # with one antenna |g|^2 = eta/D^2, maximal directly under the user
    user = UserPosition(40.0, 0.0)
    grad = gain_sq_gradient(scenario, user, AntennaLayout([40.0]))
    assert np.linalg.norm(grad) < 1e-8


@given(st.floats(0, 80), st.floats(0, 80), st.lists(st.floats(0.1, 79.9), min_size=1, max_size=5),
       st.floats(-20, 20))
def test_translation_invariance(ux, uy, xs, shift):
    sc = Scenario(region_x=200.0)
    sc_shift = Scenario(region_x=200.0, feed_x=shift)
    x = np.sort(np.asarray(xs))
    a = gains_sq(sc, [[ux, uy]], x)
    b = gains_sq(sc_shift, [[ux + shift, uy]], x + shift)
    assert np.allclose(a, b, rtol=1e-8)


@given(st.floats(0, 80), st.floats(0, 80), st.lists(st.floats(0, 80), min_size=1, max_size=6))
def test_unit_modulus_and_magnitude_law(ux, uy, xs):
    sc = Scenario()
    layout = AntennaLayout(sorted(xs))
    w = waveguide_vector(sc, layout)
    assert np.allclose(np.abs(w), 1.0, atol=1e-12)
    h = free_space_vector(sc, UserPosition(ux, uy), layout)
    dist = np.sqrt((ux - layout.as_array()) ** 2 + uy**2 + 9.0)
    assert np.allclose(np.abs(h), np.sqrt(sc.eta) / dist, rtol=1e-13)


def test_vectorized_gradient_matches_scalar(rng, scenario):
    users = rng.uniform(0, 80, (3, 2))
    x = np.sort(rng.uniform(0, 80, 5))
    g2, grad = gains_sq_and_gradient(scenario, users, x)
    for m in range(3):
        u = UserPosition(*users[m])
        assert g2[m] == pytest.approx(effective_gain(scenario, u, AntennaLayout(x)).power, rel=1e-12)
        assert np.allclose(grad[m], gain_sq_gradient(scenario, u, AntennaLayout(x)))


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(region_x=0.0)
    with pytest.raises(ValueError):
        Scenario(num_antennas=0)


def test_layout_validity(scenario):
    gap = scenario.wavelength / 2
    assert AntennaLayout([0.0, 1.0, 80.0]).is_valid(scenario, gap)
    assert not AntennaLayout([0.0, gap / 3]).is_valid(scenario, gap)
    assert not AntennaLayout([-1.0, 5.0]).is_valid(scenario, gap)
