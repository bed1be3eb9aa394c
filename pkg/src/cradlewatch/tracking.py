"""RFID zone tracking and gated GPS location storage.

A wearable tag read at an exit reader flags the baby as outside the home and
raises a trespass; GPS fixes are stored only while that flag is set. Re-entry
is a manual dashboard action (reset_outside_home) since nothing in the sensor
set can observe it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

# Largest detectable perpendicular distance per posture, cm. The detection
# range was sampled at whole centimetres; the boundary between samples is
# resolved by an inclusive threshold at the largest detected sample.
CRAWLING_RANGE_CM = 6.0
STANDING_RANGE_CM = 1.0


class NegativeDistanceError(ValueError):
    pass


class UnknownReaderError(KeyError):
    pass


class Posture(str, enum.Enum):
    CRAWLING = "crawling"
    STANDING = "standing"


@dataclass(frozen=True)
class RfidReaderConfig:
    reader_id: str
    zone: str
    is_exit: bool
    mount_height_cm: float = 3.0

    def __post_init__(self) -> None:
        if self.mount_height_cm <= 0:
            raise ValueError("mount_height_cm must be > 0")


@dataclass(frozen=True)
class LocationFix:
    lat: float
    lon: float
    ts_ms: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"lat out of range: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"lon out of range: {self.lon}")

    def as_dict(self) -> dict:
        return {"lat": self.lat, "lon": self.lon, "ts": self.ts_ms}


@dataclass(frozen=True)
class TrespassEvent:
    """A registered tag read at an exit reader."""

    reader_id: str
    zone: str
    tag: str
    ts_ms: int


@dataclass(frozen=True)
class PresenceEvent:
    """A registered tag read at a non-exit reader; outside_home is untouched."""

    reader_id: str
    zone: str
    tag: str
    ts_ms: int


@dataclass
class TrackingState:
    outside_home: bool = False
    last_trespass: tuple[str, int] | None = None  # (reader_id, ts_ms)
    latest_fix: LocationFix | None = None
    rejected_fix_count: int = 0
    _tags_seen: set[str] = field(default_factory=set, repr=False)


def rfid_detect(posture: Posture | str, distance_cm: float) -> bool:
    """Whether a tag at the given perpendicular distance is readable."""
    if distance_cm < 0:
        raise NegativeDistanceError(f"distance_cm must be >= 0, got {distance_cm}")
    limit = CRAWLING_RANGE_CM if Posture(posture) is Posture.CRAWLING else STANDING_RANGE_CM
    return distance_cm <= limit


def on_rfid_read(
    state: TrackingState,
    reader: RfidReaderConfig,
    tag: str,
    ts_ms: int,
    registered_tags: frozenset[str] | set[str],
) -> TrespassEvent | PresenceEvent | None:
    """Fold one reader hit into the state.

    Exit readers flip outside_home and produce a TrespassEvent; other readers
    produce a PresenceEvent. Unregistered tags are ignored (caller logs them).
    """
    if tag not in registered_tags:
        return None
    state._tags_seen.add(tag)
    if reader.is_exit:
        state.outside_home = True
        state.last_trespass = (reader.reader_id, ts_ms)
        return TrespassEvent(reader_id=reader.reader_id, zone=reader.zone, tag=tag, ts_ms=ts_ms)
    return PresenceEvent(reader_id=reader.reader_id, zone=reader.zone, tag=tag, ts_ms=ts_ms)


def put_location(state: TrackingState, fix: LocationFix) -> bool:
    """Store the fix iff the baby is flagged outside the home.

    Rejected fixes are counted but never stored.
    """
    if not state.outside_home:
        state.rejected_fix_count += 1
        return False
    state.latest_fix = fix
    return True


def get_latest_location(state: TrackingState) -> LocationFix | None:
    return state.latest_fix


def reset_outside_home(state: TrackingState) -> None:
    """Manual re-entry: clears the flag, keeps the last fix as history."""
    state.outside_home = False
