import random
from collections import Counter

import pytest

from coresig.model import MsgKind, NfKind, TransportProto
from coresig.rng import make_rng, substream_seed
from coresig.simulate import (
    ConfigError,
    Fixed,
    LogNormal,
    SimConfig,
    Uniform,
    bounded_stream,
    simulate,
    size_model_from_config,
    size_model_to_config,
)


def kinds(records) -> Counter:
    return Counter(r.kind for r in records)


def run(**overrides):
    return list(simulate(SimConfig(**overrides)))


class TestSeedDerivation:
    def test_substreams_are_stable_and_distinct(self):
        assert substream_seed(1, "a") == substream_seed(1, "a")
        assert substream_seed(1, "a") != substream_seed(1, "b")
        assert substream_seed(1, "a") != substream_seed(2, "a")

    def test_make_rng_reproduces(self):
        assert make_rng(9, "x").random() == make_rng(9, "x").random()


class TestSizeModels:
    def test_fixed(self):
        assert Fixed(66).sample(random.Random(0)) == 66

    def test_uniform_stays_in_bounds(self):
        rng = random.Random(0)
        model = Uniform(100, 110)
        samples = {model.sample(rng) for _ in range(500)}
        assert samples <= set(range(100, 111))
        assert len(samples) == 11  # every value reachable

    def test_lognormal_clamps(self):
        model = LogNormal(0.0, 0.1, min_clamp=400)  # raw draws near 1
        rng = random.Random(0)
        assert all(model.sample(rng) == 400 for _ in range(50))

    def test_config_round_trip(self):
        for model in (Fixed(66), Uniform(2, 9), LogNormal(6.5, 0.3, 250)):
            assert size_model_from_config(size_model_to_config(model)) == model

    def test_bad_config_shapes_error(self):
        with pytest.raises(ConfigError):
            size_model_from_config({"fixed": 1, "uniform": [1, 2]})
        with pytest.raises(ConfigError):
            size_model_from_config({"gamma": [1, 2]})
        with pytest.raises(ConfigError):
            size_model_from_config({"uniform": [1]})


class TestConfigValidation:
    def test_defaults_validate(self):
        SimConfig().validate()

    def test_negative_duration_rejected(self):
        with pytest.raises(ConfigError, match="duration_us"):
            SimConfig(duration_us=-1).validate()

    def test_zero_rate_allowed(self):
        SimConfig(session_event_rate_per_min=0.0).validate()

    def test_negative_rate_rejected(self):
        with pytest.raises(ConfigError, match="session_event_rate"):
            SimConfig(session_event_rate_per_min=-1.0).validate()

    def test_self_subscription_rejected(self):
        with pytest.raises(ConfigError, match="subscribe to itself"):
            SimConfig(subscription_map={NfKind.AMF: (NfKind.AMF,)}).validate()

    def test_unknown_size_slot_rejected(self):
        cfg = SimConfig()
        cfg.size_models["warp_drive"] = Fixed(1)
        with pytest.raises(ConfigError, match="unknown slots"):
            cfg.validate()

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            SimConfig.from_dict({"duration_sec": 10})

    def test_from_dict_round_trip(self):
        cfg = SimConfig(duration_us=1_000_000, rng_seed=77,
                        heartbeat_interval_overrides={NfKind.AMF: 500_000})
        again = SimConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_from_dict_parses_size_models(self):
        cfg = SimConfig.from_dict(
            {"size_models": {"heartbeat_patch": {"fixed": 256}}}
        )
        assert cfg.size_models["heartbeat_patch"] == Fixed(256)
        # untouched slots keep their defaults
        assert cfg.size_models["pfcp_heartbeat_request"] == Fixed(58)


class TestClosedForms:
    """Counts that follow arithmetically from the scheduling rule:
    a beat at t_reg + k*interval is admitted while it is <= duration."""

    def test_single_nf_sixty_seconds_yields_six_heartbeats(self):
        records = run(
            nf_set=(NfKind.NRF, NfKind.AMF),
            heartbeat_interval_us=10_000_000,
            duration_us=60_000_000,
        )
        counted = kinds(records)
        assert counted[MsgKind.HEARTBEAT_PATCH] == 6
        assert counted[MsgKind.NO_CONTENT_204] == 6
        assert counted[MsgKind.REGISTRATION_PUT] == 1
        # 6 heartbeat transactions of 4 packets follow the 4-packet registration
        assert len(records) == 4 + 24
        # each heartbeat: PATCH + 204 + two transport ACKs
        assert counted[MsgKind.TCP_ACK] == 2 + 12

    def test_thirty_five_seconds_floor_gives_three(self):
        counted = kinds(run(
            nf_set=(NfKind.NRF, NfKind.AMF),
            heartbeat_interval_us=10_000_000,
            duration_us=35_000_000,
        ))
        assert counted[MsgKind.HEARTBEAT_PATCH] == 3

    def test_pfcp_five_seconds_over_138_minutes_gives_1656(self):
        records = run(
            nf_set=(NfKind.SMF, NfKind.UPF),
            pfcp_heartbeat_interval_us=5_000_000,
            duration_us=8_280_000_000,
            session_event_rate_per_min=0.0,
        )
        requests = [r for r in records
                    if r.kind is MsgKind.PFCP_HEARTBEAT and r.src is NfKind.SMF]
        assert len(requests) == 1656
        assert len(records) == 2 * 1656

    def test_duration_zero_without_registration_is_empty(self):
        assert run(duration_us=0, enable_registration=False) == []

    def test_duration_zero_registers_only_the_t0_function(self):
        # AMF registers at t=0; every later stagger slot exceeds the horizon
        records = run(duration_us=0)
        counted = kinds(records)
        assert counted[MsgKind.REGISTRATION_PUT] == 1
        assert records[0].src is NfKind.AMF

    def test_zero_session_rate_suppresses_sessions_and_modifications(self):
        records = run(duration_us=120_000_000, session_event_rate_per_min=0.0)
        counted = kinds(records)
        assert counted[MsgKind.SESSION_REQUEST] == 0
        assert counted[MsgKind.MODIFICATION_REQUEST] == 0
        assert counted[MsgKind.POLICY_REQUEST] == 0

    def test_heartbeat_interval_override_applies_per_nf(self):
        records = run(
            nf_set=(NfKind.NRF, NfKind.AMF, NfKind.SMF),
            heartbeat_interval_us=10_000_000,
            heartbeat_interval_overrides={NfKind.AMF: 5_000_000},
            duration_us=60_000_000,
            session_event_rate_per_min=0.0,
        )
        patches = Counter(r.src for r in records if r.kind is MsgKind.HEARTBEAT_PATCH)
        assert patches[NfKind.AMF] == 12  # every 5 s from t=0
        # SMF registered at 150 ms: floor((60 - 0.15) / 10) = 5
        assert patches[NfKind.SMF] == 5


class TestStreamShape:
    def test_timestamps_are_sorted_non_negative_ints(self, medium_records):
        previous = 0
        for record in medium_records:
            assert isinstance(record.timestamp_us, int)
            assert record.timestamp_us >= previous
            previous = record.timestamp_us

    def test_transactions_are_never_truncated(self, medium_records):
        counted = kinds(medium_records)
        assert counted[MsgKind.REGISTRATION_PUT] == counted[MsgKind.REGISTRATION_RESPONSE]
        assert counted[MsgKind.HEARTBEAT_PATCH] == counted[MsgKind.NO_CONTENT_204]
        assert counted[MsgKind.SESSION_REQUEST] == counted[MsgKind.SESSION_RESPONSE]
        assert counted[MsgKind.POLICY_REQUEST] == counted[MsgKind.POLICY_RESPONSE]
        assert counted[MsgKind.MODIFICATION_REQUEST] == counted[
            MsgKind.MODIFICATION_RESPONSE
        ]
        assert counted[MsgKind.PFCP_REQUEST] == counted[MsgKind.PFCP_RESPONSE]
        # every HTTP request/response pair contributes exactly two ACKs,
        # every notification exactly one
        http_pairs = (
            counted[MsgKind.REGISTRATION_PUT]
            + counted[MsgKind.HEARTBEAT_PATCH]
            + counted[MsgKind.POLICY_REQUEST]
            + counted[MsgKind.SESSION_REQUEST]
            + counted[MsgKind.MODIFICATION_REQUEST]
        )
        assert counted[MsgKind.TCP_ACK] == 2 * http_pairs + counted[
            MsgKind.NOTIFICATION_POST
        ]

    def test_protocols_match_interfaces(self, medium_records):
        udp_kinds = {MsgKind.PFCP_REQUEST, MsgKind.PFCP_RESPONSE,
                     MsgKind.PFCP_HEARTBEAT}
        for record in medium_records:
            expected = (TransportProto.UDP if record.kind in udp_kinds
                        else TransportProto.TCP)
            assert record.proto is expected
            # the datagram exchange runs only between SMF and UPF
            if record.proto is TransportProto.UDP:
                assert {record.src, record.dst} == {NfKind.SMF, NfKind.UPF}

    def test_default_subscription_walk_yields_nine_notifications(self, medium_records):
        # walking the default subscription map against the registration
        # order (AMF, SMF, AUSF, UDM, UDR, PCF, NSSF, BSF, UPF) gives
        # 1 (SMF) + 1 (AUSF) + 3 (UDM) + 0 + 2 (PCF) + 0 + 2 (BSF) + 0
        notifications = [r for r in medium_records
                         if r.kind is MsgKind.NOTIFICATION_POST]
        assert len(notifications) == 9
        receivers = Counter(r.dst for r in notifications)
        assert receivers == {NfKind.AMF: 4, NfKind.SMF: 3, NfKind.AUSF: 1,
                             NfKind.PCF: 1}

    def test_registration_richness_orders_put_sizes(self, medium_records):
        puts = {r.src: r.length_bytes for r in medium_records
                if r.kind is MsgKind.REGISTRATION_PUT}
        assert puts[NfKind.AMF] > puts[NfKind.UDM] > puts[NfKind.UPF]


class TestDeterminism:
    def test_same_config_same_stream(self, medium_config, medium_records):
        assert list(simulate(medium_config)) == medium_records

    def test_different_seed_differs(self, medium_config, medium_records):
        other = SimConfig(duration_us=medium_config.duration_us, rng_seed=999)
        assert list(simulate(other)) != medium_records

    def test_session_arrivals_match_substream_replay(self, medium_config,
                                                     medium_records):
        # independent replay of the arrival substream: successive
        # exponential gaps, rounded up to at least 1 us, admitted while
        # they stay within the duration
        lam = medium_config.session_event_rate_per_min / 60_000_000.0
        rng = make_rng(medium_config.rng_seed, "sessions.arrivals")
        expected, t = [], 0
        while True:
            t += max(1, round(rng.expovariate(lam)))
            if t > medium_config.duration_us:
                break
            expected.append(t)
        actual = [r.timestamp_us for r in medium_records
                  if r.kind is MsgKind.SESSION_REQUEST]
        assert actual == expected

    def test_toggling_sessions_leaves_heartbeat_draws_untouched(self):
        base = dict(duration_us=60_000_000)
        with_sessions = run(session_event_rate_per_min=30.0, **base)
        without = run(session_event_rate_per_min=0.0, **base)

        def heartbeats(records):
            return [r for r in records
                    if r.kind in (MsgKind.HEARTBEAT_PATCH, MsgKind.NO_CONTENT_204)]

        assert heartbeats(with_sessions) == heartbeats(without)


class TestBoundedStream:
    def test_preserves_order_under_small_buffer(self, medium_records):
        subset = medium_records[:5000]
        assert list(bounded_stream(iter(subset), maxsize=7)) == subset

    def test_propagates_producer_error(self):
        def exploding():
            yield from []
            raise RuntimeError("producer died")

        def generator():
            from coresig.model import PacketRecord
            yield PacketRecord(0, NfKind.AMF, NfKind.NRF,
                               TransportProto.TCP, 10, MsgKind.OTHER)
            raise RuntimeError("producer died")

        stream = bounded_stream(generator(), maxsize=2)
        assert next(stream).length_bytes == 10
        with pytest.raises(RuntimeError, match="producer died"):
            list(stream)

    def test_rejects_zero_buffer(self):
        with pytest.raises(ValueError):
            list(bounded_stream(iter([]), maxsize=0))
