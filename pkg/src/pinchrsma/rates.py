"""Stream sets, SIC decoding orders and achievable rates for RSMA/NOMA/SDMA.

Users are 0-indexed; under RSMA the last user (index ``M - 1``) sends an
unsplit message while every other user splits into two sub-messages.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

LN2 = np.log(2.0)


class Scheme(str, Enum):
    RSMA = "rsma"
    NOMA = "noma"
    SDMA = "sdma"


class Branch(Enum):
    SPLIT1 = 1
    SPLIT2 = 2
    WHOLE = 0


class EmptySystemError(ValueError):
    pass


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class StreamId:
    user: int
    branch: Branch = Branch.WHOLE

    def __lt__(self, other):
        return (self.user, self.branch.value) < (other.user, other.branch.value)

    def __str__(self):
        if self.branch is Branch.WHOLE:
            return f"s{self.user + 1}"
        return f"s{self.user + 1},{self.branch.value}"


@dataclass(frozen=True)
class DecodingOrder:
    order: tuple[StreamId, ...]
    scheme: Scheme

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise ContractViolation("decoding order repeats a stream")

    @property
    def streams(self) -> tuple[StreamId, ...]:
        return self.order

    def position(self, s: StreamId) -> int:
        return self.order.index(s)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-stream transmit powers in Watts, aligned with ``streams``."""

    streams: tuple[StreamId, ...]
    values: tuple[float, ...]

    def __init__(self, streams, values):
        streams = tuple(streams)
        values = tuple(float(v) for v in values)
        if len(streams) != len(values):
            raise ContractViolation("streams and powers differ in length")
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, powers: Mapping[StreamId, float]):
        streams = tuple(sorted(powers))
        return cls(streams, [powers[s] for s in streams])

    def __getitem__(self, s: StreamId) -> float:
        return self.values[self.streams.index(s)]

    def as_dict(self) -> dict[StreamId, float]:
        return dict(zip(self.streams, self.values))

    def array(self, streams: Sequence[StreamId] | None = None) -> np.ndarray:
        if streams is None:
            return np.asarray(self.values)
        d = self.as_dict()
        try:
            return np.array([d[s] for s in streams], dtype=float)
        except KeyError as exc:
            raise ContractViolation(f"no power for stream {exc.args[0]}") from None

    def per_user(self, num_users: int) -> np.ndarray:
        out = np.zeros(num_users)
        for s, v in zip(self.streams, self.values):
            out[s.user] += v
        return out

    def satisfies_budget(self, p_max, tol: float = 1e-12) -> bool:
        p = np.asarray(self.values)
        if np.any(p < -tol):
            return False
        budgets = np.broadcast_to(np.asarray(p_max, dtype=float), (max(s.user for s in self.streams) + 1,))
        return bool(np.all(self.per_user(len(budgets)) <= budgets * (1 + tol) + tol))


@dataclass(frozen=True)
class RateReport:
    per_stream: dict
    per_user: np.ndarray
    sum_rate: float


def make_stream_set(scheme: Scheme | str, num_users: int):
    """Streams of a scheme and its default decoding order.

    The default RSMA order decodes every first sub-message, then the unsplit
    message of the last user, then every second sub-message.  NOMA's default
    here is user-index order; use :func:`order_by_gain` once gains are known.
    """
    scheme = Scheme(scheme)
    if num_users < 1:
        raise EmptySystemError("system has no users")
    if scheme is Scheme.RSMA and num_users > 1:
        first = [StreamId(m, Branch.SPLIT1) for m in range(num_users - 1)]
        second = [StreamId(m, Branch.SPLIT2) for m in range(num_users - 1)]
        last = StreamId(num_users - 1, Branch.WHOLE)
        streams = sorted(first + second + [last])
        order = DecodingOrder(tuple(first + [last] + second), scheme)
    else:
        streams = [StreamId(m) for m in range(num_users)]
        order = DecodingOrder(tuple(streams), scheme)
    return list(streams), order


def order_by_gain(gains, scheme: Scheme | str = Scheme.NOMA, streams=None) -> DecodingOrder:
    """Decode streams of stronger users first; ties broken by user index.

    ``gains`` is a sequence of per-user gains (complex values, ChannelGain or
    |g|^2 floats are all accepted).
    """
    g2 = _gain_power(gains)
    if g2.size == 0:
        raise EmptySystemError("no gains supplied")
    if streams is None:
        streams, _ = make_stream_set(scheme, g2.size)
    key = lambda s: (-g2[s.user], s.user, s.branch.value)
    return DecodingOrder(tuple(sorted(streams, key=key)), Scheme(scheme))


def _gain_power(gains) -> np.ndarray:
    if isinstance(gains, Mapping):
        gains = [gains[m] for m in sorted(gains)]
    out = []
    for g in gains:
        if hasattr(g, "power"):
            out.append(g.power)
        elif isinstance(g, complex) or np.iscomplexobj(g):
            out.append(abs(g) ** 2)
        else:
            out.append(float(g))
    return np.asarray(out, dtype=float)


class StreamModel:
    """Array form of a decoding order used by the solvers.

    ``interference[s, r]`` is 1 when stream ``r`` is undecoded (or, for SDMA,
    simply present) while stream ``s`` is being decoded.
    """

    def __init__(self, order: DecodingOrder, num_users: int):
        self.order = order
        # arrays are indexed by the canonical (sorted) stream list so that
        # re-ordering the SIC sequence never permutes power vectors
        self.streams = tuple(sorted(order.order))
        self.num_users = num_users
        self.owner = np.array([s.user for s in self.streams], dtype=int)
        n = len(self.streams)
        if order.scheme is Scheme.SDMA:
            mask = np.ones((n, n)) - np.eye(n)
        else:
            rank = np.array([order.order.index(s) for s in self.streams])
            mask = (rank[None, :] > rank[:, None]).astype(float)
        self.interference = mask
        self.ownership = np.zeros((num_users, n))
        self.ownership[self.owner, np.arange(n)] = 1.0

    def with_order(self, order: DecodingOrder) -> "StreamModel":
        return StreamModel(order, self.num_users)

    @property
    def num_streams(self) -> int:
        return len(self.streams)

    @property
    def sic(self) -> bool:
        return self.order.scheme is not Scheme.SDMA

    def stream_gains(self, user_gain_sq) -> np.ndarray:
        return np.asarray(user_gain_sq, dtype=float)[self.owner]

    def rates(self, p, user_gain_sq, noise_power) -> np.ndarray:
        received = np.asarray(p, dtype=float) * self.stream_gains(user_gain_sq)
        interf = self.interference @ received + noise_power
        return np.log2(1.0 + received / interf)

    def user_rates(self, stream_rates) -> np.ndarray:
        return self.ownership @ stream_rates

    def sum_rate(self, p, user_gain_sq, noise_power) -> float:
        return float(np.sum(self.rates(p, user_gain_sq, noise_power)))

    def budget_matrix(self) -> np.ndarray:
        return self.ownership


def stream_rate(s: StreamId, gains, p: PowerAllocation, order: DecodingOrder, noise_power: float) -> float:
    if s not in order.order:
        raise ContractViolation(f"stream {s} is not in the decoding order")
    model = StreamModel(order, max(x.user for x in order.order) + 1)
    pv = p.array(model.streams)
    if np.any(pv < 0):
        raise ContractViolation("negative transmit power")
    return float(model.rates(pv, _gain_power(gains), noise_power)[model.streams.index(s)])


def evaluate(gains, p: PowerAllocation, order: DecodingOrder, noise_power: float) -> RateReport:
    num_users = max(x.user for x in order.order) + 1
    model = StreamModel(order, num_users)
    pv = p.array(model.streams)
    if np.any(pv < 0):
        raise ContractViolation("negative transmit power")
    r = model.rates(pv, _gain_power(gains), noise_power)
    per_stream = dict(zip(model.streams, r.tolist()))
    per_user = model.user_rates(r)
    return RateReport(per_stream, per_user, float(per_user.sum()))


def telescoped_sum_rate(p, stream_gain_sq, noise_power) -> float:
    """log2(1 + total received power / noise); the SIC sum rate for any order."""
    return float(np.log2(1.0 + np.dot(p, stream_gain_sq) / noise_power))
