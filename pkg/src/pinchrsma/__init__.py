"""Uplink rate-splitting multiple access with pinching antennas on a dielectric waveguide."""

from .ao import AOConfig, RunResult, run
from .baselines import DiscreteGrid, run_discrete, run_noma, run_sdma
from .geometry import AntennaLayout, Scenario, UserPosition, dbm_to_watt
from .rates import DecodingOrder, PowerAllocation, Scheme, StreamId

__all__ = [
    "AOConfig", "AntennaLayout", "DecodingOrder", "DiscreteGrid", "PowerAllocation", "RunResult",
    "Scenario", "Scheme", "StreamId", "UserPosition", "dbm_to_watt", "run", "run_discrete",
    "run_noma", "run_sdma",
]
