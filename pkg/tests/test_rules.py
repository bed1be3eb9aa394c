from __future__ import annotations

import random

import pytest

from cradlewatch.calibration import CalibrationProfile
from cradlewatch.protocol import Command, SensorEvent
from cradlewatch.rules import (
    NoActuatorRegisteredError,
    RulesEngine,
    UnknownDeviceError,
)
from cradlewatch.tracking import RfidReaderConfig, UnknownReaderError

OFFSET = 8.3 / 6  # mean residual of the first calibration session

DEVICES = {"cot-mic", "cot-temp", "cot-moisture", "cot-motion", "cot-ir", "room-motion", "door-reader", "gps-tag", "solar-01"}
READERS = {
    "door-front": RfidReaderConfig(reader_id="door-front", zone="front-door", is_exit=True),
    "nursery-door": RfidReaderConfig(reader_id="nursery-door", zone="nursery", is_exit=False),
}
BINDINGS = {"led": "led-01", "camera": "cam-01", "white_noise": "noise-01"}


def make_engine(offset: float = OFFSET, debounce_ms: int = 60_000) -> RulesEngine:
    return RulesEngine(
        profile=CalibrationProfile(device_id="cot-temp", offset_c=offset),
        devices=DEVICES | set(BINDINGS.values()),
        tags={"baby-tag-1"},
        readers=READERS,
        actuator_bindings=BINDINGS,
        debounce_ms=debounce_ms,
    )


def ev(kind: str, value, ts: int, device: str | None = None, seq: int = 1) -> SensorEvent:
    defaults = {
        "sound": "cot-mic",
        "temp_c": "cot-temp",
        "moisture_pct": "cot-moisture",
        "motion_cot": "cot-motion",
        "ir_standing": "cot-ir",
        "motion_room": "room-motion",
        "rfid_read": "door-reader",
        "gps_fix": "gps-tag",
        "solar_v": "solar-01",
    }
    return SensorEvent(device_id=device or defaults[kind], seq=seq, ts_ms=ts, kind=kind, value=value)


def rfid(reader: str, ts: int, tag: str = "baby-tag-1") -> SensorEvent:
    return ev("rfid_read", {"tag": tag, "reader": reader}, ts)


class TestTemperature:
    def test_calibrated_reading_crosses_high_threshold(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("temp_c", 23.2, 1000))
        assert [a.type for a in alerts] == ["temp_high"]
        assert alerts[0].detail["temp_c"] == pytest.approx(23.2 + OFFSET)

    def test_alert_carries_calibrated_not_raw(self):
        engine = make_engine(offset=-3.0)
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("temp_c", 22.0, 0))
        assert alerts[0].type == "temp_low"
        assert alerts[0].detail["temp_c"] == pytest.approx(19.0)

    @pytest.mark.parametrize(
        "reading,expected",
        [(24.0, []), (24.01, ["temp_high"]), (20.0, []), (19.99, ["temp_low"]), (22.0, [])],
    )
    def test_strict_boundaries(self, reading, expected):
        engine = make_engine(offset=0.0)
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("temp_c", reading, 0))
        assert [a.type for a in alerts] == expected

    def test_snapshot_shows_corrected_value(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("temp_c", 20.0, 0))
        assert engine.snapshot(state).temp_c == pytest.approx(20.0 + OFFSET)


class TestEdgeCounting:
    def test_repeated_true_counts_once(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        engine.process_event(state, ev("sound", True, 1000, seq=2))
        assert state.counters.crying == 1

    def test_full_cycle_counts_again(self):
        engine = make_engine()
        state = engine.new_state()
        for i, value in enumerate([True, False, True]):
            engine.process_event(state, ev("sound", value, i * 1000, seq=i + 1))
        assert state.counters.crying == 2

    def test_movement_sources(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("motion_cot", True, 0))
        engine.process_event(state, ev("ir_standing", True, 1000))
        assert state.counters.movement == 2

    def test_room_motion_alerts_without_counting(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("motion_room", True, 0))
        assert [a.type for a in alerts] == ["motion_room"]
        assert state.counters.movement == 0

    def test_brute_force_recount_oracle(self):
        rng = random.Random(1234)
        for _ in range(200):
            values = [rng.random() < 0.5 for _ in range(rng.randrange(0, 60))]
            engine = make_engine()
            state = engine.new_state()
            for i, value in enumerate(values):
                engine.process_event(state, ev("sound", value, i * 1000, seq=i + 1))
            rising = sum(
                1 for prev, cur in zip([False] + values, values) if cur and not prev
            )
            assert state.counters.crying == rising


class TestMoisture:
    def test_wet_mattress_alert(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("moisture_pct", 25.0, 0))
        assert [a.type for a in alerts] == ["wet_mattress"]
        assert alerts[0].detail["moisture_pct"] == 25.0

    def test_threshold_is_strict(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, ev("moisture_pct", 20.0, 0))
        assert alerts == []


class TestRfidAndGps:
    def test_trespass_alert_with_no_fix(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, rfid("door-front", 0))
        assert [a.type for a in alerts] == ["rfid_trespass"]
        assert alerts[0].detail == {"reader": "door-front", "zone": "front-door", "location": None}
        assert state.tracking.outside_home is True

    def test_trespass_alert_echoes_stored_fix(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, rfid("door-front", 0))
        engine.process_event(state, ev("gps_fix", {"lat": 3.04, "lon": 101.45}, 1000))
        alerts, _ = engine.process_event(
            state, SensorEvent("door-reader", 2, 70_000, "rfid_read", {"tag": "baby-tag-1", "reader": "door-front"})
        )
        assert alerts[0].detail["location"] == {"lat": 3.04, "lon": 101.45, "ts": 1000}

    def test_accepted_fix_logged(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, rfid("door-front", 0))
        _, entries = engine.process_event(state, ev("gps_fix", {"lat": 3.0, "lon": 101.0}, 1000))
        assert ("fix", {"lat": 3.0, "lon": 101.0, "ts": 1000}) in entries

    def test_rejected_fix_not_logged(self):
        engine = make_engine()
        state = engine.new_state()
        _, entries = engine.process_event(state, ev("gps_fix", {"lat": 3.0, "lon": 101.0}, 1000))
        assert entries == []
        assert state.tracking.latest_fix is None

    def test_presence_read_no_alert(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, rfid("nursery-door", 0))
        assert alerts == []
        assert state.tracking.outside_home is False

    def test_unregistered_tag_ignored(self):
        engine = make_engine()
        state = engine.new_state()
        alerts, _ = engine.process_event(state, rfid("door-front", 0, tag="cat-tag"))
        assert alerts == []
        assert state.tracking.outside_home is False

    def test_unknown_reader_rejected(self):
        engine = make_engine()
        with pytest.raises(UnknownReaderError):
            engine.process_event(engine.new_state(), rfid("attic-door", 0))


def test_unknown_device_rejected():
    engine = make_engine()
    with pytest.raises(UnknownDeviceError):
        engine.process_event(engine.new_state(), ev("sound", True, 0, device="mystery"))


class TestDebounce:
    def test_same_type_suppressed_within_window(self):
        engine = make_engine()
        state = engine.new_state()
        emitted = []
        timeline = [(0, True), (10_000, False), (30_000, True), (40_000, False), (90_001, True)]
        for i, (ts, value) in enumerate(timeline):
            alerts, _ = engine.process_event(state, ev("sound", value, ts, seq=i + 1))
            emitted += alerts
        assert [a.ts_ms for a in emitted] == [0, 90_001]
        assert state.counters.crying == 3  # state updates are never suppressed

    def test_debounce_spans_kinds_of_same_type(self):
        engine = make_engine()
        state = engine.new_state()
        first, _ = engine.process_event(state, ev("motion_cot", True, 0))
        second, _ = engine.process_event(state, ev("ir_standing", True, 1000))
        assert [a.type for a in first] == ["movement"]
        assert second == []
        assert state.counters.movement == 2

    def test_distinct_types_do_not_interfere(self):
        engine = make_engine()
        state = engine.new_state()
        a1, _ = engine.process_event(state, ev("sound", True, 0))
        a2, _ = engine.process_event(state, ev("motion_room", True, 10))
        assert [a.type for a in a1 + a2] == ["crying", "motion_room"]

    def test_reemission_at_window_boundary(self):
        engine = make_engine(debounce_ms=60_000)
        state = engine.new_state()
        engine.process_event(state, ev("moisture_pct", 30.0, 0))
        suppressed, _ = engine.process_event(state, ev("moisture_pct", 30.0, 59_999, seq=2))
        reemitted, _ = engine.process_event(state, ev("moisture_pct", 30.0, 60_000, seq=3))
        assert suppressed == []
        assert [a.ts_ms for a in reemitted] == [60_000]


class TestCommands:
    def test_toggle_and_forward(self):
        engine = make_engine()
        state = engine.new_state()
        command = Command(cmd="led_on", ts_ms=0)
        forwarded = engine.process_command(state, command)
        assert state.actuators["led"] is True
        assert forwarded == [command]
        assert engine.device_for_command(command) == "led-01"

    def test_idempotent_no_forward(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_command(state, Command(cmd="white_noise_on", ts_ms=0))
        assert engine.process_command(state, Command(cmd="white_noise_on", ts_ms=1)) == []

    def test_off_when_off_is_noop(self):
        engine = make_engine()
        state = engine.new_state()
        assert engine.process_command(state, Command(cmd="camera_off", ts_ms=0)) == []
        assert state.actuators["camera"] is False

    def test_unbound_actuator_rejected(self):
        engine = RulesEngine(
            profile=CalibrationProfile(device_id="", offset_c=0.0),
            devices=DEVICES,
            tags=set(),
            readers={},
            actuator_bindings={},
        )
        with pytest.raises(NoActuatorRegisteredError):
            engine.process_command(engine.new_state(), Command(cmd="led_on", ts_ms=0))


class TestSnapshot:
    def test_fresh_state(self):
        engine = make_engine()
        view = engine.snapshot(engine.new_state())
        assert view.motion is False and view.sound is False
        assert view.temp_c is None and view.moisture_pct is None
        assert view.crying == 0 and view.movement == 0
        assert view.location is None and view.outside_home is False
        assert view.as_json_dict()["motion"] == "NO"

    def test_after_crying_event(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        view = engine.snapshot(state)
        assert view.sound is True and view.crying == 1
        assert view.as_json_dict()["sound"] == "YES"

    def test_view_isolated_from_later_mutations(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        view = engine.snapshot(state)
        engine.process_event(state, ev("sound", False, 1000, seq=2))
        engine.process_command(state, Command(cmd="led_on", ts_ms=2000))
        assert view.sound is True
        assert view.actuators["led"] is False


class TestRollDay:
    def test_same_day_unchanged(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        assert engine.roll_day(state, 10_000) == []
        assert state.counters.crying == 1

    def test_midnight_crossing_archives_and_zeros(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        day_ms = 86_400_000
        entries = engine.roll_day(state, day_ms + 1)
        assert entries == [("counter_archive", {"date": "1970-01-01", "crying": 1, "movement": 0})]
        assert state.counters.crying == 0
        assert state.counters.date.isoformat() == "1970-01-02"

    def test_event_crossing_midnight_rolls_automatically(self):
        engine = make_engine()
        state = engine.new_state()
        engine.process_event(state, ev("sound", True, 0))
        _, entries = engine.process_event(state, ev("sound", True, 86_400_000 + 5, seq=2))
        assert ("counter_archive", {"date": "1970-01-01", "crying": 1, "movement": 0}) in entries


def test_determinism_identical_runs():
    rng = random.Random(4321)
    events = []
    for i in range(300):
        choice = rng.randrange(5)
        ts = i * 7_000
        if choice == 0:
            events.append(ev("sound", rng.random() < 0.5, ts, seq=i))
        elif choice == 1:
            events.append(ev("temp_c", rng.uniform(15, 30), ts, seq=i))
        elif choice == 2:
            events.append(ev("moisture_pct", rng.uniform(0, 60), ts, seq=i))
        elif choice == 3:
            events.append(rfid("door-front" if rng.random() < 0.5 else "nursery-door", ts))
        else:
            events.append(ev("gps_fix", {"lat": rng.uniform(-5, 5), "lon": rng.uniform(100, 102)}, ts, seq=i))

    def run():
        engine = make_engine()
        state = engine.new_state()
        emitted = []
        for event in events:
            alerts, _ = engine.process_event(state, event)
            emitted += [a.as_dict() for a in alerts]
        return emitted, engine.snapshot(state).as_json_dict()

    assert run() == run()
