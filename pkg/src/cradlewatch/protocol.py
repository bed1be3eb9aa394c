"""Wire format between simulated devices and the hub.

Everything on the wire is newline-delimited JSON, one object per line:

* device -> hub: sensor events, ``{"v":1,"dev":...,"seq":...,"ts":...,"kind":...,"val":...}``
* device -> hub: a hello line ``{"v":1,"hello":"<device-id>","ts":...}`` sent once
  after connecting, so the hub can route actuator commands back to the right
  connection (actuator devices never send sensor events).
* hub -> device: actuator commands, ``{"v":1,"cmd":...,"ts":...}``

Decoders never abort a stream: a bad line raises exactly one error and the
caller drops the line. Unknown JSON keys are ignored for forward compatibility.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Any

PROTOCOL_VERSION = 1

EVENT_KINDS = frozenset(
    {
        "temp_c",
        "sound",
        "motion_cot",
        "motion_room",
        "ir_standing",
        "moisture_pct",
        "rfid_read",
        "gps_fix",
        "solar_v",
    }
)

BOOL_KINDS = frozenset({"sound", "motion_cot", "motion_room", "ir_standing"})
NUMERIC_KINDS = frozenset({"temp_c", "solar_v", "moisture_pct"})

COMMANDS = frozenset(
    {
        "led_on",
        "led_off",
        "camera_on",
        "camera_off",
        "white_noise_on",
        "white_noise_off",
    }
)


class ProtocolError(ValueError):
    """Base class for per-line wire format errors."""


class MalformedJsonError(ProtocolError):
    pass


class UnknownKindError(ProtocolError):
    pass


class InvariantViolationError(ProtocolError):
    """A structurally valid line whose content breaks a field invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class StaleSequenceError(ProtocolError):
    """Event seq is not strictly greater than the last accepted for the device."""


def _require_number(field_name: str, value: Any) -> float:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvariantViolationError(field_name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InvariantViolationError(field_name, "must be finite")
    return float(value)


@dataclass(frozen=True)
class SensorEvent:
    """One timestamped telemetry datum from a device."""

    device_id: str
    seq: int
    ts_ms: int
    kind: str
    value: Any
    version: int = PROTOCOL_VERSION

    def validate(self) -> None:
        if self.version != PROTOCOL_VERSION:
            raise InvariantViolationError("version", f"must be {PROTOCOL_VERSION}")
        if not isinstance(self.device_id, str) or not self.device_id:
            raise InvariantViolationError("dev", "must be a non-empty string")
        if isinstance(self.seq, bool) or not isinstance(self.seq, int):
            raise InvariantViolationError("seq", "must be an integer")
        if isinstance(self.ts_ms, bool) or not isinstance(self.ts_ms, int):
            raise InvariantViolationError("ts", "must be integer milliseconds")
        if self.kind not in EVENT_KINDS:
            raise UnknownKindError(f"unknown event kind {self.kind!r}")
        self._validate_value()

    def _validate_value(self) -> None:
        v = self.value
        if self.kind in BOOL_KINDS:
            if not isinstance(v, bool):
                raise InvariantViolationError("val", f"{self.kind} carries a boolean")
        elif self.kind in NUMERIC_KINDS:
            num = _require_number("val", v)
            if self.kind == "moisture_pct" and not 0.0 <= num <= 100.0:
                raise InvariantViolationError("val", "moisture_pct must be in [0, 100]")
        elif self.kind == "rfid_read":
            if not isinstance(v, dict):
                raise InvariantViolationError("val", "rfid_read carries {tag, reader}")
            for key in ("tag", "reader"):
                if not isinstance(v.get(key), str) or not v[key]:
                    raise InvariantViolationError("val", f"rfid_read.{key} must be a non-empty string")
        elif self.kind == "gps_fix":
            if not isinstance(v, dict):
                raise InvariantViolationError("val", "gps_fix carries {lat, lon}")
            lat = _require_number("val", v.get("lat"))
            lon = _require_number("val", v.get("lon"))
            if not -90.0 <= lat <= 90.0:
                raise InvariantViolationError("val", "lat must be in [-90, 90]")
            if not -180.0 <= lon <= 180.0:
                raise InvariantViolationError("val", "lon must be in [-180, 180]")

    def wire_dict(self) -> dict[str, Any]:
        return {
            "v": self.version,
            "dev": self.device_id,
            "seq": self.seq,
            "ts": self.ts_ms,
            "kind": self.kind,
            "val": self.value,
        }


@dataclass(frozen=True)
class Command:
    """An actuator command issued by the hub."""

    cmd: str
    ts_ms: int
    version: int = PROTOCOL_VERSION

    def validate(self) -> None:
        if self.version != PROTOCOL_VERSION:
            raise InvariantViolationError("version", f"must be {PROTOCOL_VERSION}")
        if self.cmd not in COMMANDS:
            raise UnknownKindError(f"unknown command {self.cmd!r}")
        if isinstance(self.ts_ms, bool) or not isinstance(self.ts_ms, int):
            raise InvariantViolationError("ts", "must be integer milliseconds")

    def wire_dict(self) -> dict[str, Any]:
        return {"v": self.version, "cmd": self.cmd, "ts": self.ts_ms}


def encode_event(event: SensorEvent) -> bytes:
    """Encode one event as a single LF-terminated UTF-8 JSON line."""
    event.validate()
    line = json.dumps(event.wire_dict(), separators=(",", ":"), ensure_ascii=False)
    return line.encode("utf-8") + b"\n"


def _load_json_line(line: bytes | str) -> dict[str, Any]:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJsonError(f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedJsonError("line is not a JSON object")
    return obj


def _require_key(obj: dict[str, Any], key: str) -> Any:
    if key not in obj:
        raise MalformedJsonError(f"missing key {key!r}")
    return obj[key]


def event_from_wire(obj: dict[str, Any]) -> SensorEvent:
    """Build and validate a SensorEvent from an already-parsed wire object."""
    event = SensorEvent(
        version=_require_key(obj, "v"),
        device_id=_require_key(obj, "dev"),
        seq=_require_key(obj, "seq"),
        ts_ms=_require_key(obj, "ts"),
        kind=_require_key(obj, "kind"),
        value=_require_key(obj, "val"),
    )
    event.validate()
    return event


def decode_event(line: bytes | str) -> SensorEvent:
    """Decode one wire line into a SensorEvent, or raise a ProtocolError.

    Round-trips with encode_event; unknown JSON keys are ignored.
    """
    return event_from_wire(_load_json_line(line))


def encode_command(command: Command) -> bytes:
    command.validate()
    line = json.dumps(command.wire_dict(), separators=(",", ":"), ensure_ascii=False)
    return line.encode("utf-8") + b"\n"


def command_from_wire(obj: dict[str, Any]) -> Command:
    command = Command(
        version=_require_key(obj, "v"),
        cmd=_require_key(obj, "cmd"),
        ts_ms=_require_key(obj, "ts"),
    )
    command.validate()
    return command


def decode_command(line: bytes | str) -> Command:
    """Mirror of decode_event for the six actuator command literals."""
    return command_from_wire(_load_json_line(line))


def encode_hello(device_id: str, ts_ms: int = 0) -> bytes:
    line = json.dumps(
        {"v": PROTOCOL_VERSION, "hello": device_id, "ts": ts_ms},
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return line.encode("utf-8") + b"\n"


def decode_hello(line: bytes | str) -> str | None:
    """Return the device id if the line is a hello, else None.

    Hello detection is cheap so connection handlers can try it before
    decode_event without double-reporting errors.
    """
    try:
        obj = _load_json_line(line)
    except MalformedJsonError:
        return None
    if "hello" not in obj:
        return None
    dev = obj["hello"]
    if obj.get("v") != PROTOCOL_VERSION or not isinstance(dev, str) or not dev:
        return None
    return dev


@dataclass
class SequenceGate:
    """Per-device strictly-increasing seq check for an accepted event stream.

    Duplicate or old seqs are discarded, not buffered: the system has no
    retransmission concept.
    """

    _last: dict[str, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def admit(self, event: SensorEvent) -> None:
        """Accept the event or raise StaleSequenceError (event is discarded)."""
        with self._lock:
            last = self._last.get(event.device_id)
            if last is not None and event.seq <= last:
                raise StaleSequenceError(
                    f"{event.device_id}: seq {event.seq} <= last accepted {last}"
                )
            self._last[event.device_id] = event.seq
