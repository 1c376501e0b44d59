"""Deterministic generator of 5G core control-plane signaling traces.

The simulator runs a discrete-event loop over six transaction families:

* service registration with the NRF (HTTP PUT + response),
* periodic NRF heartbeats (HTTP PATCH + 204 No Content),
* status-change notifications from the NRF to subscribed functions,
* policy-association exchanges between AMF and PCF,
* session-context establishment between AMF and SMF, with a paired
  PFCP establishment between SMF and UPF,
* session modifications (AMF to SMF, with a paired PFCP modification),

plus standalone PFCP heartbeats on the SMF/UPF link.  Transport-level
TCP ACKs are modeled explicitly for the HTTP exchanges so byte totals
and per-pair length distributions resemble a captured trace.

Determinism: events sit on a heap keyed by ``(timestamp, sequence)``;
every stochastic family draws from its own labeled substream derived
from the master seed (see :mod:`coresig.rng`), so the same config always
yields the byte-identical packet stream, and enabling one family never
perturbs the draws of another.

Scheduling rule: a periodic or arrival-driven transaction is admitted
when its start time is within the configured duration (inclusive).  An
admitted transaction always completes — trailing responses and ACKs may
carry timestamps slightly past the duration boundary, but a transaction
is never truncated mid-flight.
"""

from __future__ import annotations

import heapq
import math
import queue
import random
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Union

from coresig.model import (
    NF_ORDER,
    Endpoint,
    MsgKind,
    NfKind,
    PacketRecord,
    TransportProto,
)
from coresig.rng import make_rng

__all__ = [
    "ConfigError",
    "Fixed",
    "Uniform",
    "LogNormal",
    "SizeModel",
    "SimConfig",
    "simulate",
    "bounded_stream",
    "registration_packets",
    "heartbeat_packets",
    "notification_packets",
    "policy_packets",
    "session_packets",
    "modification_packets",
    "pfcp_heartbeat_packets",
]


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent simulation configuration."""


# ---------------------------------------------------------------------------
# Packet size models


@dataclass(frozen=True)
class Fixed:
    """Every packet of this slot has the same size."""

    size: int

    def sample(self, rng: random.Random) -> int:
        return self.size


@dataclass(frozen=True)
class Uniform:
    """Sizes drawn uniformly from the inclusive integer range [lo, hi]."""

    lo: int
    hi: int

    def sample(self, rng: random.Random) -> int:
        return rng.randint(self.lo, self.hi)


@dataclass(frozen=True)
class LogNormal:
    """Sizes drawn log-normally (parameters of the underlying normal),
    rounded to an integer and clamped from below."""

    mu: float
    sigma: float
    min_clamp: int = 1

    def sample(self, rng: random.Random) -> int:
        return max(self.min_clamp, round(rng.lognormvariate(self.mu, self.sigma)))


SizeModel = Union[Fixed, Uniform, LogNormal]


def _check_size_model(slot: str, model: SizeModel) -> list[str]:
    problems = []
    if isinstance(model, Fixed):
        if model.size < 1:
            problems.append(f"size model {slot!r}: fixed size must be >= 1")
    elif isinstance(model, Uniform):
        if model.lo < 1 or model.hi < model.lo:
            problems.append(f"size model {slot!r}: need 1 <= lo <= hi")
    elif isinstance(model, LogNormal):
        if model.sigma < 0 or model.min_clamp < 1:
            problems.append(f"size model {slot!r}: need sigma >= 0 and min_clamp >= 1")
    else:
        problems.append(f"size model {slot!r}: unknown model type {type(model).__name__}")
    return problems


def size_model_from_config(value: object) -> SizeModel:
    """Parse the JSON form of a size model.

    Accepted shapes: ``{"fixed": N}``, ``{"uniform": [lo, hi]}`` and
    ``{"lognormal": [mu, sigma]}`` or ``{"lognormal": [mu, sigma, min_clamp]}``.
    """
    if not isinstance(value, Mapping) or len(value) != 1:
        raise ConfigError(f"size model must be a single-key object, got {value!r}")
    (name, params), = value.items()
    try:
        if name == "fixed":
            return Fixed(int(params))
        if name == "uniform":
            lo, hi = params
            return Uniform(int(lo), int(hi))
        if name == "lognormal":
            if len(params) == 2:
                mu, sigma = params
                return LogNormal(float(mu), float(sigma))
            mu, sigma, clamp = params
            return LogNormal(float(mu), float(sigma), int(clamp))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for size model {name!r}: {params!r}") from exc
    raise ConfigError(f"unknown size model kind: {name!r}")


def size_model_to_config(model: SizeModel) -> dict:
    if isinstance(model, Fixed):
        return {"fixed": model.size}
    if isinstance(model, Uniform):
        return {"uniform": [model.lo, model.hi]}
    return {"lognormal": [model.mu, model.sigma, model.min_clamp]}


# ---------------------------------------------------------------------------
# Configuration

# One entry per kind of payload the simulator draws; requests and their
# responses are separate slots so their size relationships can be shaped
# independently.
DEFAULT_SIZE_MODELS: dict[str, SizeModel] = {
    "registration_put": Uniform(2400, 2700),
    "registration_response": Uniform(340, 460),
    "heartbeat_patch": Uniform(244, 276),
    "heartbeat_no_content": Fixed(138),
    "notification_post": Uniform(2900, 3400),
    "policy_request": Uniform(900, 1100),
    "policy_response_extra": Uniform(120, 260),
    "session_request": Uniform(1500, 1900),
    "session_response": Uniform(800, 1000),
    "modification_request": LogNormal(math.log(950.0), 0.35, 250),
    "modification_response": Uniform(500, 700),
    "pfcp_session_request": Uniform(180, 260),
    "pfcp_session_response": Uniform(90, 140),
    "pfcp_modify_request": Uniform(120, 200),
    "pfcp_modify_response": Uniform(80, 110),
    "pfcp_heartbeat_request": Fixed(58),
    "pfcp_heartbeat_response": Fixed(54),
}

# Relative size of each function's registration profile document.  The
# AMF and SMF carry the richest profiles (many served areas, S-NSSAIs and
# service entries); the UPF profile is the leanest.
DEFAULT_REGISTRATION_RICHNESS: dict[NfKind, float] = {
    NfKind.AMF: 1.00,
    NfKind.SMF: 0.93,
    NfKind.UDM: 0.58,
    NfKind.PCF: 0.56,
    NfKind.AUSF: 0.52,
    NfKind.UDR: 0.48,
    NfKind.NSSF: 0.44,
    NfKind.BSF: 0.40,
    NfKind.UPF: 0.35,
}

# Who subscribes to whose availability at the NRF.  A notification goes
# out when a watched function registers after its subscriber.
DEFAULT_SUBSCRIPTION_MAP: dict[NfKind, tuple[NfKind, ...]] = {
    NfKind.AMF: (NfKind.SMF, NfKind.AUSF, NfKind.UDM, NfKind.PCF),
    NfKind.SMF: (NfKind.UDM, NfKind.PCF, NfKind.BSF),
    NfKind.AUSF: (NfKind.UDM,),
    NfKind.PCF: (NfKind.BSF, NfKind.UDR),
}

DEFAULT_DURATION_US = 8_280_000_000  # 138 minutes
DEFAULT_HEARTBEAT_INTERVAL_US = 2_000_000
DEFAULT_PFCP_HEARTBEAT_INTERVAL_US = 2_000_000

# Delay ranges in microseconds, all drawn per transaction.
_ACK_DELAY = (80, 300)
_HTTP_RESPONSE_DELAY = (800, 2500)
_PFCP_RESPONSE_DELAY = (150, 600)
_NOTIFICATION_DELAY = (1_500, 6_000)
_POLICY_DELAY = (2_000, 8_000)
_PFCP_FOLLOW_DELAY = (400, 1_200)


@dataclass
class SimConfig:
    """Everything the simulator needs; identical configs give identical traces."""

    duration_us: int = DEFAULT_DURATION_US
    rng_seed: int = 1
    nf_set: tuple[NfKind, ...] = NF_ORDER
    heartbeat_interval_us: int = DEFAULT_HEARTBEAT_INTERVAL_US
    heartbeat_interval_overrides: dict[NfKind, int] = field(default_factory=dict)
    pfcp_heartbeat_interval_us: int = DEFAULT_PFCP_HEARTBEAT_INTERVAL_US
    session_event_rate_per_min: float = 2.0
    modification_rate_per_min: float = 10.0
    registration_stagger_us: int = 150_000
    tcp_ack_len: int = 66
    enable_registration: bool = True
    enable_tcp_acks: bool = True
    registration_richness: dict[NfKind, float] = field(
        default_factory=lambda: dict(DEFAULT_REGISTRATION_RICHNESS)
    )
    subscription_map: dict[NfKind, tuple[NfKind, ...]] = field(
        default_factory=lambda: dict(DEFAULT_SUBSCRIPTION_MAP)
    )
    size_models: dict[str, SizeModel] = field(
        default_factory=lambda: dict(DEFAULT_SIZE_MODELS)
    )

    def heartbeat_interval_for(self, nf: NfKind) -> int:
        return self.heartbeat_interval_overrides.get(nf, self.heartbeat_interval_us)

    def richness_for(self, nf: NfKind) -> float:
        return self.registration_richness.get(nf, 1.0)

    def sample_size(self, slot: str, rng: random.Random) -> int:
        return self.size_models[slot].sample(rng)

    def validate(self) -> None:
        """Raise :class:`ConfigError` listing every problem found."""
        problems: list[str] = []
        if self.duration_us < 0:
            problems.append("duration_us must be >= 0")
        if not self.nf_set:
            problems.append("nf_set must not be empty")
        if len(set(self.nf_set)) != len(self.nf_set):
            problems.append("nf_set contains duplicates")
        if self.heartbeat_interval_us < 1:
            problems.append("heartbeat_interval_us must be >= 1")
        for nf, interval in self.heartbeat_interval_overrides.items():
            if interval < 1:
                problems.append(f"heartbeat interval override for {nf} must be >= 1")
        if self.pfcp_heartbeat_interval_us < 1:
            problems.append("pfcp_heartbeat_interval_us must be >= 1")
        if self.session_event_rate_per_min < 0:
            problems.append("session_event_rate_per_min must be >= 0")
        if self.modification_rate_per_min < 0:
            problems.append("modification_rate_per_min must be >= 0")
        if self.registration_stagger_us < 0:
            problems.append("registration_stagger_us must be >= 0")
        if self.tcp_ack_len < 1:
            problems.append("tcp_ack_len must be >= 1")
        for nf, factor in self.registration_richness.items():
            if factor <= 0:
                problems.append(f"registration richness for {nf} must be > 0")
        for watcher, watched in self.subscription_map.items():
            if watcher in watched:
                problems.append(f"{watcher} must not subscribe to itself")
        missing = set(DEFAULT_SIZE_MODELS) - set(self.size_models)
        if missing:
            problems.append(f"size_models missing slots: {sorted(missing)}")
        unknown = set(self.size_models) - set(DEFAULT_SIZE_MODELS)
        if unknown:
            problems.append(f"size_models has unknown slots: {sorted(unknown)}")
        for slot, model in self.size_models.items():
            if slot in DEFAULT_SIZE_MODELS:
                problems.extend(_check_size_model(slot, model))
        if problems:
            raise ConfigError("; ".join(problems))

    # -- JSON config round-trip -------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimConfig":
        """Build a config from its JSON object form.

        Unknown keys are rejected so typos in config files fail loudly.
        """
        if not isinstance(data, Mapping):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        known = {
            "duration_us",
            "rng_seed",
            "nf_set",
            "heartbeat_interval_us",
            "heartbeat_interval_overrides",
            "pfcp_heartbeat_interval_us",
            "session_event_rate_per_min",
            "modification_rate_per_min",
            "registration_stagger_us",
            "tcp_ack_len",
            "enable_registration",
            "enable_tcp_acks",
            "registration_richness",
            "subscription_map",
            "size_models",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        kwargs: dict = {}
        try:
            for key in (
                "duration_us",
                "rng_seed",
                "heartbeat_interval_us",
                "pfcp_heartbeat_interval_us",
                "registration_stagger_us",
                "tcp_ack_len",
            ):
                if key in data:
                    kwargs[key] = int(data[key])
            for key in ("session_event_rate_per_min", "modification_rate_per_min"):
                if key in data:
                    kwargs[key] = float(data[key])
            for key in ("enable_registration", "enable_tcp_acks"):
                if key in data:
                    kwargs[key] = bool(data[key])
            if "nf_set" in data:
                kwargs["nf_set"] = tuple(NfKind.parse(name) for name in data["nf_set"])
            if "heartbeat_interval_overrides" in data:
                kwargs["heartbeat_interval_overrides"] = {
                    NfKind.parse(name): int(v)
                    for name, v in data["heartbeat_interval_overrides"].items()
                }
            if "registration_richness" in data:
                kwargs["registration_richness"] = {
                    NfKind.parse(name): float(v)
                    for name, v in data["registration_richness"].items()
                }
            if "subscription_map" in data:
                kwargs["subscription_map"] = {
                    NfKind.parse(name): tuple(NfKind.parse(w) for w in watched)
                    for name, watched in data["subscription_map"].items()
                }
            if "size_models" in data:
                models = dict(DEFAULT_SIZE_MODELS)
                for slot, value in data["size_models"].items():
                    models[slot] = size_model_from_config(value)
                kwargs["size_models"] = models
        except ConfigError:
            raise
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc

        config = cls(**kwargs)
        config.validate()
        return config

    def to_dict(self) -> dict:
        return {
            "duration_us": self.duration_us,
            "rng_seed": self.rng_seed,
            "nf_set": [nf.value for nf in self.nf_set],
            "heartbeat_interval_us": self.heartbeat_interval_us,
            "heartbeat_interval_overrides": {
                nf.value: v for nf, v in self.heartbeat_interval_overrides.items()
            },
            "pfcp_heartbeat_interval_us": self.pfcp_heartbeat_interval_us,
            "session_event_rate_per_min": self.session_event_rate_per_min,
            "modification_rate_per_min": self.modification_rate_per_min,
            "registration_stagger_us": self.registration_stagger_us,
            "tcp_ack_len": self.tcp_ack_len,
            "enable_registration": self.enable_registration,
            "enable_tcp_acks": self.enable_tcp_acks,
            "registration_richness": {
                nf.value: v for nf, v in self.registration_richness.items()
            },
            "subscription_map": {
                nf.value: [w.value for w in watched]
                for nf, watched in self.subscription_map.items()
            },
            "size_models": {
                slot: size_model_to_config(model)
                for slot, model in sorted(self.size_models.items())
            },
        }


# ---------------------------------------------------------------------------
# Transaction builders
#
# Each builder returns the complete, time-ordered packet list for one
# transaction starting at time ``t``, drawing sizes and delays from the
# supplied substream.  The simulator composes these; tests can call them
# directly.


def _http_exchange(
    cfg: SimConfig,
    rng: random.Random,
    t: int,
    src: NfKind,
    dst: NfKind,
    req_kind: MsgKind,
    req_len: int,
    resp_kind: MsgKind,
    resp_len: int,
) -> list[PacketRecord]:
    """Request, transport ACK, response, transport ACK."""
    tcp = TransportProto.TCP
    req_ack_at = t + rng.randint(*_ACK_DELAY)
    resp_at = t + rng.randint(*_HTTP_RESPONSE_DELAY)
    resp_ack_at = resp_at + rng.randint(*_ACK_DELAY)
    packets = [PacketRecord(t, src, dst, tcp, req_len, req_kind)]
    if cfg.enable_tcp_acks:
        packets.append(PacketRecord(req_ack_at, dst, src, tcp, cfg.tcp_ack_len, MsgKind.TCP_ACK))
    packets.append(PacketRecord(resp_at, dst, src, tcp, resp_len, resp_kind))
    if cfg.enable_tcp_acks:
        packets.append(PacketRecord(resp_ack_at, src, dst, tcp, cfg.tcp_ack_len, MsgKind.TCP_ACK))
    return packets


def registration_packets(
    cfg: SimConfig, rng: random.Random, nf: NfKind, t: int
) -> list[PacketRecord]:
    """NF registers its profile with the NRF."""
    put_len = max(1, round(cfg.sample_size("registration_put", rng) * cfg.richness_for(nf)))
    resp_len = cfg.sample_size("registration_response", rng)
    return _http_exchange(
        cfg, rng, t, nf, NfKind.NRF,
        MsgKind.REGISTRATION_PUT, put_len,
        MsgKind.REGISTRATION_RESPONSE, resp_len,
    )


def heartbeat_packets(
    cfg: SimConfig, rng: random.Random, nf: NfKind, t: int
) -> list[PacketRecord]:
    """One NRF heartbeat: PATCH, ACK, 204 No Content, ACK."""
    patch_len = cfg.sample_size("heartbeat_patch", rng)
    resp_len = cfg.sample_size("heartbeat_no_content", rng)
    return _http_exchange(
        cfg, rng, t, nf, NfKind.NRF,
        MsgKind.HEARTBEAT_PATCH, patch_len,
        MsgKind.NO_CONTENT_204, resp_len,
    )


def notification_packets(
    cfg: SimConfig, rng: random.Random, subscriber: NfKind, t: int
) -> list[PacketRecord]:
    """NRF notifies a subscriber about a profile change (POST + ACK)."""
    post_len = cfg.sample_size("notification_post", rng)
    packets = [PacketRecord(t, NfKind.NRF, subscriber, TransportProto.TCP, post_len,
                            MsgKind.NOTIFICATION_POST)]
    if cfg.enable_tcp_acks:
        packets.append(PacketRecord(
            t + rng.randint(*_ACK_DELAY), subscriber, NfKind.NRF,
            TransportProto.TCP, cfg.tcp_ack_len, MsgKind.TCP_ACK,
        ))
    return packets


def policy_packets(cfg: SimConfig, rng: random.Random, t: int) -> list[PacketRecord]:
    """AMF establishes a policy association with the PCF."""
    req_len = cfg.sample_size("policy_request", rng)
    resp_len = req_len + cfg.sample_size("policy_response_extra", rng)
    return _http_exchange(
        cfg, rng, t, NfKind.AMF, NfKind.PCF,
        MsgKind.POLICY_REQUEST, req_len,
        MsgKind.POLICY_RESPONSE, resp_len,
    )


def _pfcp_exchange(
    cfg: SimConfig,
    rng: random.Random,
    t: int,
    req_slot: str,
    resp_slot: str,
    kind_req: MsgKind = MsgKind.PFCP_REQUEST,
    kind_resp: MsgKind = MsgKind.PFCP_RESPONSE,
) -> list[PacketRecord]:
    udp = TransportProto.UDP
    req_len = cfg.sample_size(req_slot, rng)
    resp_len = cfg.sample_size(resp_slot, rng)
    resp_at = t + rng.randint(*_PFCP_RESPONSE_DELAY)
    return [
        PacketRecord(t, NfKind.SMF, NfKind.UPF, udp, req_len, kind_req),
        PacketRecord(resp_at, NfKind.UPF, NfKind.SMF, udp, resp_len, kind_resp),
    ]


def session_packets(
    cfg: SimConfig, rng: random.Random, t: int, with_pfcp: bool
) -> list[PacketRecord]:
    """AMF creates a session context at the SMF; the SMF establishes the
    matching PFCP session with the UPF just after responding."""
    req_len = cfg.sample_size("session_request", rng)
    resp_len = cfg.sample_size("session_response", rng)
    packets = _http_exchange(
        cfg, rng, t, NfKind.AMF, NfKind.SMF,
        MsgKind.SESSION_REQUEST, req_len,
        MsgKind.SESSION_RESPONSE, resp_len,
    )
    if with_pfcp:
        resp_at = max(p.timestamp_us for p in packets)
        pfcp_at = resp_at + rng.randint(*_PFCP_FOLLOW_DELAY)
        packets += _pfcp_exchange(
            cfg, rng, pfcp_at, "pfcp_session_request", "pfcp_session_response"
        )
    return packets


def modification_packets(
    cfg: SimConfig, rng: random.Random, t: int, with_pfcp: bool
) -> list[PacketRecord]:
    """AMF updates an established session at the SMF, with the paired
    PFCP modification toward the UPF."""
    req_len = cfg.sample_size("modification_request", rng)
    resp_len = cfg.sample_size("modification_response", rng)
    packets = _http_exchange(
        cfg, rng, t, NfKind.AMF, NfKind.SMF,
        MsgKind.MODIFICATION_REQUEST, req_len,
        MsgKind.MODIFICATION_RESPONSE, resp_len,
    )
    if with_pfcp:
        resp_at = max(p.timestamp_us for p in packets)
        pfcp_at = resp_at + rng.randint(*_PFCP_FOLLOW_DELAY)
        packets += _pfcp_exchange(
            cfg, rng, pfcp_at, "pfcp_modify_request", "pfcp_modify_response"
        )
    return packets


def pfcp_heartbeat_packets(
    cfg: SimConfig, rng: random.Random, t: int
) -> list[PacketRecord]:
    """PFCP heartbeat request/response on the SMF-UPF association."""
    return _pfcp_exchange(
        cfg, rng, t,
        "pfcp_heartbeat_request", "pfcp_heartbeat_response",
        MsgKind.PFCP_HEARTBEAT, MsgKind.PFCP_HEARTBEAT,
    )


# ---------------------------------------------------------------------------
# Event loop

_EventPayload = Union[PacketRecord, Callable[[int], None]]


class _Simulator:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.heap: list[tuple[int, int, _EventPayload]] = []
        self.seq = 0
        self._rngs: dict[str, random.Random] = {}
        self.registered_at: dict[NfKind, int] = {}
        self.modifications_started = False

    def rng(self, label: str) -> random.Random:
        r = self._rngs.get(label)
        if r is None:
            r = make_rng(self.cfg.rng_seed, label)
            self._rngs[label] = r
        return r

    def push(self, t: int, payload: _EventPayload) -> None:
        heapq.heappush(self.heap, (t, self.seq, payload))
        self.seq += 1

    def push_packets(self, packets: Iterable[PacketRecord]) -> None:
        for p in packets:
            self.push(p.timestamp_us, p)

    # -- family scheduling ------------------------------------------------

    def schedule_initial(self) -> None:
        cfg = self.cfg
        nfs = set(cfg.nf_set)
        if cfg.enable_registration and NfKind.NRF in nfs:
            order = [nf for nf in NF_ORDER if nf in nfs and nf is not NfKind.NRF]
            for i, nf in enumerate(order):
                t_reg = i * cfg.registration_stagger_us
                if t_reg <= cfg.duration_us:
                    self.push(t_reg, lambda t, nf=nf: self.on_register(nf, t))
        if NfKind.SMF in nfs and NfKind.UPF in nfs:
            first = cfg.pfcp_heartbeat_interval_us
            if first <= cfg.duration_us:
                self.push(first, self.on_pfcp_heartbeat)
        if NfKind.AMF in nfs and NfKind.SMF in nfs and cfg.session_event_rate_per_min > 0:
            gap = self.arrival_gap("sessions.arrivals", cfg.session_event_rate_per_min)
            if gap <= cfg.duration_us:
                self.push(gap, self.on_session)

    def arrival_gap(self, label: str, rate_per_min: float) -> int:
        lam = rate_per_min / 60_000_000.0  # events per microsecond
        return max(1, round(self.rng(label).expovariate(lam)))

    def on_register(self, nf: NfKind, t: int) -> None:
        cfg = self.cfg
        self.registered_at[nf] = t
        packets = registration_packets(cfg, self.rng("registration"), nf, t)
        self.push_packets(packets)
        # notify every subscriber already registered and watching this NF
        reg_done = max(p.timestamp_us for p in packets)
        notify_rng = self.rng("notifications")
        for watcher in NF_ORDER:
            if watcher is nf or watcher not in self.registered_at:
                continue
            if nf in cfg.subscription_map.get(watcher, ()):
                notify_at = reg_done + notify_rng.randint(*_NOTIFICATION_DELAY)
                self.push_packets(notification_packets(cfg, notify_rng, watcher, notify_at))
        # start this NF's heartbeat chain
        interval = cfg.heartbeat_interval_for(nf)
        if t + interval <= cfg.duration_us:
            self.push(t + interval, lambda tt, nf=nf: self.on_heartbeat(nf, tt))

    def on_heartbeat(self, nf: NfKind, t: int) -> None:
        cfg = self.cfg
        self.push_packets(heartbeat_packets(cfg, self.rng(f"heartbeat:{nf.value}"), nf, t))
        t_next = t + cfg.heartbeat_interval_for(nf)
        if t_next <= cfg.duration_us:
            self.push(t_next, lambda tt, nf=nf: self.on_heartbeat(nf, tt))

    def on_pfcp_heartbeat(self, t: int) -> None:
        cfg = self.cfg
        self.push_packets(pfcp_heartbeat_packets(cfg, self.rng("pfcp-heartbeat"), t))
        t_next = t + cfg.pfcp_heartbeat_interval_us
        if t_next <= cfg.duration_us:
            self.push(t_next, self.on_pfcp_heartbeat)

    def on_session(self, t: int) -> None:
        cfg = self.cfg
        nfs = set(cfg.nf_set)
        with_pfcp = NfKind.UPF in nfs
        self.push_packets(session_packets(cfg, self.rng("sessions.payload"), t, with_pfcp))
        if NfKind.PCF in nfs:
            policy_rng = self.rng("policy")
            policy_at = t + policy_rng.randint(*_POLICY_DELAY)
            self.push_packets(policy_packets(cfg, policy_rng, policy_at))
        if not self.modifications_started and cfg.modification_rate_per_min > 0:
            self.modifications_started = True
            gap = self.arrival_gap("modifications.arrivals", cfg.modification_rate_per_min)
            if t + gap <= cfg.duration_us:
                self.push(t + gap, self.on_modification)
        gap = self.arrival_gap("sessions.arrivals", cfg.session_event_rate_per_min)
        if t + gap <= cfg.duration_us:
            self.push(t + gap, self.on_session)

    def on_modification(self, t: int) -> None:
        cfg = self.cfg
        with_pfcp = NfKind.UPF in set(cfg.nf_set)
        self.push_packets(
            modification_packets(cfg, self.rng("modifications.payload"), t, with_pfcp)
        )
        gap = self.arrival_gap("modifications.arrivals", cfg.modification_rate_per_min)
        if t + gap <= cfg.duration_us:
            self.push(t + gap, self.on_modification)

    # -- main loop ---------------------------------------------------------

    def run(self) -> Iterator[PacketRecord]:
        self.schedule_initial()
        heap = self.heap
        while heap:
            t, _, payload = heapq.heappop(heap)
            if isinstance(payload, PacketRecord):
                yield payload
            else:
                payload(t)


def simulate(config: SimConfig) -> Iterator[PacketRecord]:
    """Generate the packet stream for ``config``, ordered by timestamp.

    The stream is fully deterministic for a given config.  Packets of
    concurrent transactions interleave naturally; ties on the timestamp
    preserve scheduling order.
    """
    config.validate()
    return _Simulator(config).run()


def bounded_stream(
    records: Iterable[PacketRecord], maxsize: int = 1024
) -> Iterator[PacketRecord]:
    """Re-yield ``records`` through a bounded queue fed from a worker thread.

    This lets generation and consumption overlap while bounding memory:
    the producer blocks once ``maxsize`` records are waiting.  Order is
    preserved and nothing is dropped; a producer-side exception is
    re-raised to the consumer after the already-queued records.
    """
    if maxsize < 1:
        raise ValueError("maxsize must be >= 1")
    q: queue.Queue = queue.Queue(maxsize)
    done = object()
    failure: list[BaseException] = []

    def feed() -> None:
        try:
            for rec in records:
                q.put(rec)
        except BaseException as exc:  # propagate to the consumer side
            failure.append(exc)
        finally:
            q.put(done)

    worker = threading.Thread(target=feed, name="coresig-stream-feeder", daemon=True)
    worker.start()
    while True:
        item = q.get()
        if item is done:
            break
        yield item
    worker.join()
    if failure:
        raise failure[0]
