"""Domain types shared by the simulator and the analysis pipeline.

Packet lengths are on-wire sizes in bytes; timestamps are integer
microseconds relative to the start of the trace.  Statistics are kept in
one-pass (Welford) form so they can be updated incrementally from a live
stream and merged across parallel partial aggregations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union


class NfKind(enum.Enum):
    """Core network functions covered by the analysis, in matrix axis order."""

    NRF = "NRF"
    AMF = "AMF"
    SMF = "SMF"
    AUSF = "AUSF"
    UDM = "UDM"
    UDR = "UDR"
    PCF = "PCF"
    NSSF = "NSSF"
    BSF = "BSF"
    UPF = "UPF"

    def __str__(self) -> str:  # serialize as the bare name
        return self.value

    @classmethod
    def parse(cls, text: str) -> "NfKind":
        """Parse a network-function name, case-insensitively.

        Raises ``ValueError`` for anything that is not one of the ten
        known functions.
        """
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown network function name: {text!r}") from None


#: Fixed axis order used by every matrix, grid and figure.
NF_ORDER: tuple[NfKind, ...] = tuple(NfKind)

#: Row/column index of each function in :data:`NF_ORDER`.
NF_INDEX: dict[NfKind, int] = {nf: i for i, nf in enumerate(NF_ORDER)}


class TransportProto(enum.Enum):
    TCP = "TCP"
    UDP = "UDP"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "TransportProto":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown transport protocol: {text!r}") from None


class MsgKind(enum.Enum):
    """Message classification attached to each packet.

    Synthetic traces always carry a specific kind; captured traces may
    leave the field empty, which parses as :attr:`OTHER`.
    """

    REGISTRATION_PUT = "RegistrationPut"
    REGISTRATION_RESPONSE = "RegistrationResponse"
    HEARTBEAT_PATCH = "HeartbeatPatch"
    NO_CONTENT_204 = "NoContent204"
    NOTIFICATION_POST = "NotificationPost"
    POLICY_REQUEST = "PolicyRequest"
    POLICY_RESPONSE = "PolicyResponse"
    SESSION_REQUEST = "SessionRequest"
    SESSION_RESPONSE = "SessionResponse"
    MODIFICATION_REQUEST = "ModificationRequest"
    MODIFICATION_RESPONSE = "ModificationResponse"
    PFCP_REQUEST = "PfcpRequest"
    PFCP_RESPONSE = "PfcpResponse"
    PFCP_HEARTBEAT = "PfcpHeartbeat"
    TCP_ACK = "TcpAck"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "MsgKind":
        text = text.strip()
        if not text:
            return cls.OTHER
        for kind in cls:
            if kind.value.lower() == text.lower():
                return kind
        raise ValueError(f"unknown message kind: {text!r}")


#: A packet endpoint: a core function, or a raw address string for
#: anything outside the ten tracked functions.
Endpoint = Union[NfKind, str]


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One observed packet of control-plane traffic."""

    timestamp_us: int
    src: Endpoint
    dst: Endpoint
    proto: TransportProto
    length_bytes: int
    kind: MsgKind = MsgKind.OTHER

    def __post_init__(self) -> None:
        if self.timestamp_us < 0:
            raise ValueError(f"negative timestamp: {self.timestamp_us}")
        if self.length_bytes < 1:
            raise ValueError(f"non-positive packet length: {self.length_bytes}")

    @property
    def is_core(self) -> bool:
        """True when both endpoints are tracked core functions."""
        return isinstance(self.src, NfKind) and isinstance(self.dst, NfKind)


class InteractionKey(NamedTuple):
    """A directed source/destination pair of core functions."""

    src: NfKind
    dst: NfKind


class StatsSummary(NamedTuple):
    """Finalized statistics for one directed interaction."""

    count: int
    mean: float
    max: int
    stddev: float

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(slots=True)
class InteractionStats:
    """One-pass length statistics for a single directed interaction.

    Maintains count, running mean, maximum and the Welford ``m2`` sum of
    squared deviations, so mean and standard deviation come out of a
    single pass without storing individual lengths.
    """

    count: int = 0
    mean_len: float = 0.0
    max_len: int = 0
    m2: float = 0.0

    def update(self, length_bytes: int) -> None:
        """Fold one packet length into the running statistics."""
        if length_bytes < 1:
            raise ValueError(f"non-positive packet length: {length_bytes}")
        self.count += 1
        delta = length_bytes - self.mean_len
        self.mean_len += delta / self.count
        self.m2 += delta * (length_bytes - self.mean_len)
        if length_bytes > self.max_len:
            self.max_len = length_bytes

    def merge(self, other: "InteractionStats") -> None:
        """Absorb another accumulator, as if its packets had been seen here.

        Uses the parallel (Chan) combination of means and m2 terms, so
        splitting a stream into parts and merging gives the same result
        as a single pass, up to floating-point rounding.
        """
        if other.count == 0:
            return
        if self.count == 0:
            self.count = other.count
            self.mean_len = other.mean_len
            self.max_len = other.max_len
            self.m2 = other.m2
            return
        total = self.count + other.count
        delta = other.mean_len - self.mean_len
        self.m2 += other.m2 + delta * delta * self.count * other.count / total
        self.mean_len += delta * other.count / total
        self.count = total
        if other.max_len > self.max_len:
            self.max_len = other.max_len

    def copy(self) -> "InteractionStats":
        return InteractionStats(self.count, self.mean_len, self.max_len, self.m2)

    def finalize(self, sample: bool = False) -> StatsSummary:
        """Produce the final summary.

        ``sample=False`` (default) uses the population standard deviation
        ``sqrt(m2 / count)``; ``sample=True`` uses the n-1 form, which is
        0 for a single packet.  An interaction with no packets finalizes
        to an all-zero summary flagged ``empty``.
        """
        if self.count == 0:
            return StatsSummary(0, 0.0, 0, 0.0)
        if sample:
            var = self.m2 / (self.count - 1) if self.count > 1 else 0.0
        else:
            var = self.m2 / self.count
        # tiny negative m2 can appear from rounding; clamp before sqrt
        return StatsSummary(self.count, self.mean_len, self.max_len, math.sqrt(max(var, 0.0)))


@dataclass(slots=True)
class TraceMeta:
    """Trace-level counters carried alongside the statistics matrix."""

    duration_us: int = 0
    total_packets_ingested: int = 0
    total_packets_filtered_out: int = 0


def _empty_cells() -> dict[InteractionKey, InteractionStats]:
    return {
        InteractionKey(src, dst): InteractionStats()
        for src in NF_ORDER
        for dst in NF_ORDER
    }


@dataclass(slots=True)
class StatsMatrix:
    """Per-interaction statistics for all 100 directed function pairs.

    Every key exists from the start; pairs that never exchanged traffic
    stay at their zero state.  Self-pairs (the diagonal) are always zero
    because a function does not send packets to itself.
    """

    cells: dict[InteractionKey, InteractionStats] = field(default_factory=_empty_cells)
    meta: TraceMeta = field(default_factory=TraceMeta)

    def cell(self, src: NfKind, dst: NfKind) -> InteractionStats:
        return self.cells[InteractionKey(src, dst)]

    def total_count(self) -> int:
        return sum(s.count for s in self.cells.values())

    def copy(self) -> "StatsMatrix":
        return StatsMatrix(
            cells={k: s.copy() for k, s in self.cells.items()},
            meta=TraceMeta(
                self.meta.duration_us,
                self.meta.total_packets_ingested,
                self.meta.total_packets_filtered_out,
            ),
        )

    def merge(self, other: "StatsMatrix") -> None:
        """Fold a partial aggregation produced elsewhere into this one."""
        for key, stats in other.cells.items():
            self.cells[key].merge(stats)
        self.meta.duration_us = max(self.meta.duration_us, other.meta.duration_us)
        self.meta.total_packets_ingested += other.meta.total_packets_ingested
        self.meta.total_packets_filtered_out += other.meta.total_packets_filtered_out
