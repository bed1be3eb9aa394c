from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cradlewatch.protocol import (
    COMMANDS,
    Command,
    InvariantViolationError,
    MalformedJsonError,
    SensorEvent,
    SequenceGate,
    StaleSequenceError,
    UnknownKindError,
    decode_command,
    decode_event,
    decode_hello,
    encode_command,
    encode_event,
    encode_hello,
)


def make_event(**overrides) -> SensorEvent:
    fields = dict(device_id="cot-01", seq=1, ts_ms=0, kind="temp_c", value=22.5)
    fields.update(overrides)
    return SensorEvent(**fields)


class TestEncode:
    def test_temp_event_exact_bytes(self):
        line = encode_event(make_event())
        assert line == b'{"v":1,"dev":"cot-01","seq":1,"ts":0,"kind":"temp_c","val":22.5}\n'

    def test_sound_event_fields(self):
        obj = json.loads(encode_event(make_event(kind="sound", value=True)))
        assert obj["kind"] == "sound"
        assert obj["val"] is True

    def test_rfid_event_payload(self):
        event = make_event(kind="rfid_read", value={"tag": "baby-tag-1", "reader": "door-front"})
        obj = json.loads(encode_event(event))
        assert obj["val"] == {"tag": "baby-tag-1", "reader": "door-front"}

    def test_single_lf_terminated_line(self):
        line = encode_event(make_event())
        assert line.endswith(b"\n") and line.count(b"\n") == 1


class TestDecode:
    def test_round_trip(self):
        event = make_event()
        assert decode_event(encode_event(event)) == event

    def test_wrong_version_rejected(self):
        with pytest.raises(InvariantViolationError) as err:
            decode_event(b'{"v":2,"dev":"x","seq":1,"ts":0,"kind":"temp_c","val":1.0}')
        assert err.value.field_name == "version"

    def test_non_numeric_temp_rejected(self):
        with pytest.raises(InvariantViolationError) as err:
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"temp_c","val":"hot"}')
        assert err.value.field_name == "val"

    def test_unknown_kind_rejected(self):
        with pytest.raises(UnknownKindError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"humidity","val":1}')

    def test_bad_json_rejected(self):
        with pytest.raises(MalformedJsonError):
            decode_event(b"{nope")

    def test_non_object_rejected(self):
        with pytest.raises(MalformedJsonError):
            decode_event(b"[1,2,3]")

    def test_missing_key_rejected(self):
        with pytest.raises(MalformedJsonError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"temp_c"}')

    def test_unknown_keys_ignored(self):
        event = make_event()
        obj = json.loads(encode_event(event))
        obj["future_field"] = {"anything": 1}
        assert decode_event(json.dumps(obj).encode()) == event

    def test_moisture_out_of_range_rejected(self):
        with pytest.raises(InvariantViolationError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"moisture_pct","val":150}')

    def test_gps_out_of_range_rejected(self):
        with pytest.raises(InvariantViolationError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"gps_fix","val":{"lat":95,"lon":0}}')

    def test_nan_rejected(self):
        with pytest.raises(InvariantViolationError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"temp_c","val":NaN}')

    def test_bool_kind_requires_bool(self):
        with pytest.raises(InvariantViolationError):
            decode_event(b'{"v":1,"dev":"x","seq":1,"ts":0,"kind":"sound","val":1}')


class TestCommands:
    def test_decode_led_on(self):
        assert decode_command(b'{"v":1,"cmd":"led_on","ts":5}') == Command(cmd="led_on", ts_ms=5)

    def test_unknown_literal_rejected(self):
        with pytest.raises(UnknownKindError):
            decode_command(b'{"v":1,"cmd":"explode","ts":5}')

    @pytest.mark.parametrize("cmd", sorted(COMMANDS))
    def test_round_trip_every_literal(self, cmd):
        command = Command(cmd=cmd, ts_ms=123)
        assert decode_command(encode_command(command)) == command

    def test_wrong_version_rejected(self):
        with pytest.raises(InvariantViolationError):
            decode_command(b'{"v":3,"cmd":"led_on","ts":5}')


class TestHello:
    def test_round_trip(self):
        assert decode_hello(encode_hello("noise-01")) == "noise-01"

    def test_event_line_is_not_hello(self):
        assert decode_hello(encode_event(make_event())) is None

    def test_garbage_is_not_hello(self):
        assert decode_hello(b"{nope") is None


class TestSequenceGate:
    def test_increasing_accepted(self):
        gate = SequenceGate()
        gate.admit(make_event(seq=1))
        gate.admit(make_event(seq=2))
        gate.admit(make_event(seq=10))

    def test_duplicate_discarded(self):
        gate = SequenceGate()
        gate.admit(make_event(seq=3))
        with pytest.raises(StaleSequenceError):
            gate.admit(make_event(seq=3))

    def test_old_seq_discarded(self):
        gate = SequenceGate()
        gate.admit(make_event(seq=5))
        with pytest.raises(StaleSequenceError):
            gate.admit(make_event(seq=4))

    def test_devices_independent(self):
        gate = SequenceGate()
        gate.admit(make_event(seq=5))
        gate.admit(make_event(device_id="other", seq=1))


# -- property tests ------------------------------------------------------------

_device_ids = st.text(min_size=1, max_size=12).filter(lambda s: s.strip() == s and s)
_finite = st.floats(allow_nan=False, allow_infinity=False)


def _event_strategy() -> st.SearchStrategy[SensorEvent]:
    by_kind = st.one_of(
        st.tuples(st.just("temp_c"), _finite),
        st.tuples(st.just("solar_v"), _finite),
        st.tuples(st.just("moisture_pct"), st.floats(0, 100, allow_nan=False)),
        st.tuples(st.sampled_from(["sound", "motion_cot", "motion_room", "ir_standing"]), st.booleans()),
        st.tuples(
            st.just("rfid_read"),
            st.fixed_dictionaries({"tag": _device_ids, "reader": _device_ids}),
        ),
        st.tuples(
            st.just("gps_fix"),
            st.fixed_dictionaries(
                {"lat": st.floats(-90, 90, allow_nan=False), "lon": st.floats(-180, 180, allow_nan=False)}
            ),
        ),
    )
    return st.builds(
        lambda dev, seq, ts, kv: SensorEvent(device_id=dev, seq=seq, ts_ms=ts, kind=kv[0], value=kv[1]),
        _device_ids,
        st.integers(min_value=0, max_value=2**40),
        st.integers(min_value=0, max_value=2**48),
        by_kind,
    )


@given(_event_strategy())
def test_event_round_trip_property(event):
    assert decode_event(encode_event(event)) == event


@given(st.sampled_from(sorted(COMMANDS)), st.integers(min_value=0, max_value=2**48))
def test_command_round_trip_property(cmd, ts):
    command = Command(cmd=cmd, ts_ms=ts)
    assert decode_command(encode_command(command)) == command
