"""Event-driven surveillance rules: fold telemetry into state, emit alerts.

Checks are applied per event in the same order the monitoring loop runs them:
tag reads first, then crying/awakening, then room motion, temperature, and
mattress wetness. Counters are edge-triggered (false -> true transitions), so
they count occurrences rather than poll rate. Alert emission is rate-limited
per type by a debounce window; state updates are never suppressed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from typing import Any

from . import tracking
from .calibration import CalibrationProfile
from .environment import wetness_alert
from .protocol import Command, SensorEvent
from .tracking import RfidReaderConfig, TrackingState, TrespassEvent

logger = logging.getLogger(__name__)

# Comfortable nursery range; readings strictly outside it raise alerts.
TEMP_LOW_C = 20.0
TEMP_HIGH_C = 24.0

DEFAULT_DEBOUNCE_MS = 60_000

ALERT_TYPES = (
    "temp_high",
    "temp_low",
    "crying",
    "movement",
    "motion_room",
    "wet_mattress",
    "rfid_trespass",
)

# Which boolean kinds feed which counter/alert on a rising edge.
_CRY_KINDS = ("sound",)
_MOVEMENT_KINDS = ("motion_cot", "ir_standing")

ACTUATORS = ("led", "camera", "white_noise")

_COMMAND_EFFECT = {
    "led_on": ("led", True),
    "led_off": ("led", False),
    "camera_on": ("camera", True),
    "camera_off": ("camera", False),
    "white_noise_on": ("white_noise", True),
    "white_noise_off": ("white_noise", False),
}


class UnknownDeviceError(KeyError):
    pass


class NoActuatorRegisteredError(KeyError):
    pass


@dataclass(frozen=True)
class Alert:
    """A typed guardian notification with debounce identity on ``type``."""

    type: str
    ts_ms: int
    detail: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        return {"type": self.type, "ts": self.ts_ms, "detail": self.detail}


@dataclass
class DayCounters:
    crying: int = 0
    movement: int = 0
    date: date | None = None


@dataclass
class SurveillanceState:
    last: dict[str, tuple[Any, int]] = field(default_factory=dict)
    edge: dict[str, bool] = field(default_factory=dict)
    counters: DayCounters = field(default_factory=DayCounters)
    tracking: TrackingState = field(default_factory=TrackingState)
    actuators: dict[str, bool] = field(default_factory=lambda: {a: False for a in ACTUATORS})
    debounce: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class StateView:
    """Immutable dashboard snapshot; later state mutations never leak into it."""

    motion: bool
    sound: bool
    temp_c: float | None
    moisture_pct: float | None
    crying: int
    movement: int
    counter_date: date | None
    actuators: dict[str, bool]
    outside_home: bool
    location: tracking.LocationFix | None

    def as_json_dict(self) -> dict[str, Any]:
        return {
            "motion": "YES" if self.motion else "NO",
            "sound": "YES" if self.sound else "NO",
            "temp_c": self.temp_c,
            "moisture_pct": self.moisture_pct,
            "counters": {
                "crying": self.crying,
                "movement": self.movement,
                "date": self.counter_date.isoformat() if self.counter_date else None,
            },
            "actuators": dict(self.actuators),
            "outside_home": self.outside_home,
            "location": self.location.as_dict() if self.location else None,
        }


def _utc_date(ts_ms: int) -> date:
    return datetime.fromtimestamp(ts_ms / 1000, tz=timezone.utc).date()


class RulesEngine:
    """Stateless-per-call rule evaluator over an explicit SurveillanceState.

    Holding the engine's configuration (calibration profile, registries,
    debounce window) apart from the state keeps log replay trivial: build the
    same engine, fold the same events, compare the emissions.
    """

    def __init__(
        self,
        profile: CalibrationProfile,
        devices: frozenset[str] | set[str],
        tags: frozenset[str] | set[str],
        readers: dict[str, RfidReaderConfig],
        actuator_bindings: dict[str, str],
        debounce_ms: int = DEFAULT_DEBOUNCE_MS,
    ):
        self.profile = profile
        self.devices = frozenset(devices)
        self.tags = frozenset(tags)
        self.readers = dict(readers)
        self.actuator_bindings = dict(actuator_bindings)
        self.debounce_ms = debounce_ms

    def new_state(self) -> SurveillanceState:
        return SurveillanceState()

    # -- event path ---------------------------------------------------------

    def process_event(
        self, state: SurveillanceState, event: SensorEvent
    ) -> tuple[list[Alert], list[tuple[str, dict[str, Any]]]]:
        """Fold one accepted event; returns (emitted alerts, extra log entries).

        State reflects every update even when the debounce filter suppresses
        the matching alert.
        """
        if event.device_id not in self.devices:
            raise UnknownDeviceError(event.device_id)

        log_entries = self.roll_day(state, event.ts_ms)
        alerts: list[Alert] = []
        kind, ts = event.kind, event.ts_ms
        stored_value = event.value

        if kind == "rfid_read":
            alerts += self._on_rfid(state, event)
        elif kind in _CRY_KINDS:
            if self._rising(state, kind, event.value):
                state.counters.crying += 1
                alerts.append(Alert("crying", ts, {"source": kind}))
        elif kind in _MOVEMENT_KINDS:
            if self._rising(state, kind, event.value):
                state.counters.movement += 1
                alerts.append(Alert("movement", ts, {"source": kind}))
        elif kind == "motion_room":
            if self._rising(state, kind, event.value):
                alerts.append(Alert("motion_room", ts, {"source": kind}))
        elif kind == "temp_c":
            corrected = self.profile.apply(event.value)
            stored_value = corrected
            if corrected > TEMP_HIGH_C:
                alerts.append(Alert("temp_high", ts, {"temp_c": corrected}))
            elif corrected < TEMP_LOW_C:
                alerts.append(Alert("temp_low", ts, {"temp_c": corrected}))
        elif kind == "moisture_pct":
            if wetness_alert(event.value):
                alerts.append(Alert("wet_mattress", ts, {"moisture_pct": event.value}))
        elif kind == "gps_fix":
            fix = tracking.LocationFix(lat=event.value["lat"], lon=event.value["lon"], ts_ms=ts)
            if tracking.put_location(state.tracking, fix):
                log_entries.append(("fix", fix.as_dict()))
        # solar_v only updates the latest-reading map

        state.last[kind] = (stored_value, ts)
        emitted = [a for a in alerts if self._debounce_admit(state, a)]
        return emitted, log_entries

    def _on_rfid(self, state: SurveillanceState, event: SensorEvent) -> list[Alert]:
        tag = event.value["tag"]
        reader_id = event.value["reader"]
        reader = self.readers.get(reader_id)
        if reader is None:
            raise tracking.UnknownReaderError(reader_id)
        result = tracking.on_rfid_read(state.tracking, reader, tag, event.ts_ms, self.tags)
        if result is None:
            logger.info("ignoring unregistered tag %r at reader %s", tag, reader_id)
            return []
        if isinstance(result, TrespassEvent):
            fix = tracking.get_latest_location(state.tracking)
            detail = {
                "reader": result.reader_id,
                "zone": result.zone,
                "location": fix.as_dict() if fix else None,
            }
            return [Alert("rfid_trespass", event.ts_ms, detail)]
        logger.debug("presence: tag %r at zone %s", tag, result.zone)
        return []

    def _rising(self, state: SurveillanceState, kind: str, value: bool) -> bool:
        previous = state.edge.get(kind, False)
        state.edge[kind] = value
        return value and not previous

    def _debounce_admit(self, state: SurveillanceState, alert: Alert) -> bool:
        last = state.debounce.get(alert.type)
        if last is not None and alert.ts_ms - last < self.debounce_ms:
            return False
        state.debounce[alert.type] = alert.ts_ms
        return True

    # -- command path -------------------------------------------------------

    def process_command(self, state: SurveillanceState, command: Command) -> list[Command]:
        """Apply an actuator command; returns commands to forward to devices.

        Idempotent: commanding an actuator into its current state forwards
        nothing.
        """
        actuator, desired = _COMMAND_EFFECT[command.cmd]
        if actuator not in self.actuator_bindings:
            raise NoActuatorRegisteredError(actuator)
        if state.actuators.get(actuator, False) == desired:
            return []
        state.actuators[actuator] = desired
        return [command]

    def device_for_command(self, command: Command) -> str:
        actuator, _ = _COMMAND_EFFECT[command.cmd]
        device = self.actuator_bindings.get(actuator)
        if device is None:
            raise NoActuatorRegisteredError(actuator)
        return device

    # -- views & housekeeping ------------------------------------------------

    def snapshot(self, state: SurveillanceState) -> StateView:
        def last_bool(kind: str) -> bool:
            value, _ = state.last.get(kind, (False, 0))
            return bool(value)

        def last_number(kind: str) -> float | None:
            entry = state.last.get(kind)
            return None if entry is None else float(entry[0])

        fix = state.tracking.latest_fix
        return StateView(
            motion=last_bool("motion_cot") or last_bool("motion_room"),
            sound=last_bool("sound"),
            temp_c=last_number("temp_c"),
            moisture_pct=last_number("moisture_pct"),
            crying=state.counters.crying,
            movement=state.counters.movement,
            counter_date=state.counters.date,
            actuators=dict(state.actuators),
            outside_home=state.tracking.outside_home,
            location=replace(fix) if fix else None,
        )

    def roll_day(self, state: SurveillanceState, ts_ms: int) -> list[tuple[str, dict[str, Any]]]:
        """Archive and zero the daily counters when the calendar day changes."""
        day = _utc_date(ts_ms)
        counters = state.counters
        if counters.date == day:
            return []
        entries: list[tuple[str, dict[str, Any]]] = []
        if counters.date is not None:
            entries.append(
                (
                    "counter_archive",
                    {
                        "date": counters.date.isoformat(),
                        "crying": counters.crying,
                        "movement": counters.movement,
                    },
                )
            )
        counters.crying = 0
        counters.movement = 0
        counters.date = day
        return entries
