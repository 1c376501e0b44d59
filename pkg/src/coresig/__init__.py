"""Synthetic 5G core signaling traces and per-interaction traffic analytics.

The package has two halves that meet at the packet-record level:

* :mod:`coresig.simulate` produces deterministic control-plane traffic
  traces between core network functions.
* :mod:`coresig.stats`, :mod:`coresig.cluster`, :mod:`coresig.figures`
  and :mod:`coresig.report` turn any such trace (synthetic or captured)
  into per-interaction statistics, histograms, cluster characterizations
  and a rendered report directory.

:mod:`coresig.cli` wires both halves into the ``coresig`` command.
"""

from coresig.model import (
    InteractionKey,
    InteractionStats,
    MsgKind,
    NfKind,
    PacketRecord,
    StatsMatrix,
    StatsSummary,
    TransportProto,
)

__all__ = [
    "InteractionKey",
    "InteractionStats",
    "MsgKind",
    "NfKind",
    "PacketRecord",
    "StatsMatrix",
    "StatsSummary",
    "TransportProto",
]

__version__ = "0.1.0"
