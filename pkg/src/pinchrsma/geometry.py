"""Line-of-sight channel between ground users and a pinching-antenna waveguide.

Each user sees every pinching antenna through a spherical-wave free-space
link, and the antennas feed a single dielectric waveguide whose in-guide
phase depends on the distance to the feed point.  The effective scalar gain
of user ``m`` is

    g_m = sum_n conj(h_m[n]) * h_w[n]

with ``h_m[n] = sqrt(eta) * exp(-1j*k*D_mn) / D_mn`` and
``h_w[n] = exp(-1j*k_g*|x_n - feed_x|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Scenario:
    """Physical setup of one uplink PASS deployment.

    Derived quantities (wavelengths, ``eta``) are properties so a scenario is
    fully described by its primary fields.
    """

    region_x: float = 80.0
    region_y: float = 80.0
    carrier_freq: float = 28e9
    refractive_index: float = 1.4
    waveguide_height: float = 3.0
    noise_power: float = 1e-12
    num_antennas: int = 6
    num_users: int = 2
    feed_x: float = 0.0

    def __post_init__(self):
        for name in ("region_x", "region_y", "carrier_freq", "refractive_index",
                     "waveguide_height", "noise_power"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if self.num_users < 1:
            raise ValueError("num_users must be >= 1")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def guided_wavelength(self) -> float:
        return self.wavelength / self.refractive_index

    @property
    def eta(self) -> float:
        return SPEED_OF_LIGHT**2 / (16.0 * np.pi**2 * self.carrier_freq**2)


@dataclass(frozen=True)
class UserPosition:
    x: float
    y: float

    def within(self, scenario: Scenario) -> bool:
        return 0.0 <= self.x <= scenario.region_x and 0.0 <= self.y <= scenario.region_y


@dataclass(frozen=True)
class AntennaLayout:
    """Ascending x-coordinates of the pinching antennas (metres)."""

    positions: tuple[float, ...]

    def __init__(self, positions):
        object.__setattr__(self, "positions", tuple(float(p) for p in positions))

    def __len__(self):
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    def is_valid(self, scenario: Scenario, min_gap: float, tol: float = 1e-9) -> bool:
        x = self.as_array()
        if x.size == 0:
            return False
        if x[0] < -tol or x[-1] > scenario.region_x + tol:
            return False
        return bool(np.all(np.diff(x) >= min_gap - tol))


@dataclass(frozen=True)
class ChannelGain:
    value: complex
    per_antenna_terms: np.ndarray = field(repr=False)

    @property
    def power(self) -> float:
        return abs(self.value) ** 2


def _distances(scenario: Scenario, ux, uy, x):
    # ux, uy broadcast against x
    return np.sqrt((ux - x) ** 2 + uy**2 + scenario.waveguide_height**2)


def free_space_vector(scenario: Scenario, user: UserPosition, layout: AntennaLayout) -> np.ndarray:
    x = layout.as_array()
    dist = _distances(scenario, user.x, user.y, x)
    k = 2.0 * np.pi / scenario.wavelength
    return np.sqrt(scenario.eta) * np.exp(-1j * k * dist) / dist


def waveguide_vector(scenario: Scenario, layout: AntennaLayout) -> np.ndarray:
    x = layout.as_array()
    k_g = 2.0 * np.pi / scenario.guided_wavelength
    return np.exp(-1j * k_g * np.abs(scenario.feed_x - x))


def effective_gain(scenario: Scenario, user: UserPosition, layout: AntennaLayout) -> ChannelGain:
    terms = np.conj(free_space_vector(scenario, user, layout)) * waveguide_vector(scenario, layout)
    return ChannelGain(complex(terms.sum()), terms)


def gain_terms(scenario: Scenario, users_xy: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Per-antenna summands of ``g_m`` for all users at once, shape (M, N).

    ``users_xy`` is an (M, 2) array; ``x`` the antenna coordinates.
    """
    users_xy = np.asarray(users_xy, dtype=float).reshape(-1, 2)
    x = np.asarray(x, dtype=float)
    dist = _distances(scenario, users_xy[:, :1], users_xy[:, 1:], x[None, :])
    k = 2.0 * np.pi / scenario.wavelength
    k_g = 2.0 * np.pi / scenario.guided_wavelength
    phase = k * dist - k_g * np.abs(x - scenario.feed_x)
    return np.sqrt(scenario.eta) / dist * np.exp(1j * phase)


def gains_sq(scenario: Scenario, users_xy: np.ndarray, x: np.ndarray) -> np.ndarray:
    """|g_m|^2 for every user, shape (M,)."""
    g = gain_terms(scenario, users_xy, x).sum(axis=1)
    return g.real**2 + g.imag**2


def gains_sq_and_gradient(scenario: Scenario, users_xy: np.ndarray, x: np.ndarray):
    """Return ``(|g|^2, d|g|^2/dx)`` with shapes (M,) and (M, N).

    The waveguide phase uses ``sign(0) := +1`` at the feed point.
    """
    users_xy = np.asarray(users_xy, dtype=float).reshape(-1, 2)
    x = np.asarray(x, dtype=float)
    ux = users_xy[:, :1]
    dist = _distances(scenario, ux, users_xy[:, 1:], x[None, :])
    k = 2.0 * np.pi / scenario.wavelength
    k_g = 2.0 * np.pi / scenario.guided_wavelength
    offset = x - scenario.feed_x
    phase = k * dist - k_g * np.abs(offset)
    terms = np.sqrt(scenario.eta) / dist * np.exp(1j * phase)
    g = terms.sum(axis=1)

    sgn = np.where(offset >= 0.0, 1.0, -1.0)
    ddist = (x[None, :] - ux) / dist
    # d(term)/dx_n = term * (-ddist/D + 1j*(k*ddist - k_g*sign))
    dterms = terms * (-ddist / dist + 1j * (k * ddist - k_g * sgn[None, :]))
    grad = 2.0 * (np.conj(g)[:, None] * dterms).real
    return g.real**2 + g.imag**2, grad


def gain_sq_gradient(scenario: Scenario, user: UserPosition, layout: AntennaLayout) -> np.ndarray:
    _, grad = gains_sq_and_gradient(scenario, [[user.x, user.y]], layout.as_array())
    return grad[0]


def users_array(users) -> np.ndarray:
    """Accept a sequence of UserPosition or an (M, 2) array."""
    if isinstance(users, np.ndarray):
        return users.reshape(-1, 2).astype(float)
    return np.array([[u.x, u.y] for u in users], dtype=float).reshape(-1, 2)
