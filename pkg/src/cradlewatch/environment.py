"""Deterministic environment models: mattress wetness and solar supply.

Both the device simulator (to synthesize readings) and the tests (as oracles)
use these models. The lookup data ships as JSON config under
``cradlewatch/data/`` and a hub config may point at alternative files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import time as dtime
from importlib import resources
from pathlib import Path

WEATHERS = ("direct_sun", "cloudy", "heavy_rain")

# Moisture reading above which the mattress counts as wet (strictly greater).
WETNESS_ALERT_PCT = 20.0

# Charge-controller cut-in: below this the hub is assumed to run on mains.
SOLAR_OPERATIONAL_VOLTS = 12.0


class NegativeVolumeError(ValueError):
    pass


@dataclass(frozen=True)
class MattressMaterial:
    """Piecewise-linear water-volume -> moisture-percent curve for one fabric."""

    name: str
    anchors: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.anchors) < 2:
            raise ValueError("need at least two anchors")
        if self.anchors[0] != (0.0, 0.0):
            raise ValueError("first anchor must be (0, 0)")
        if self.anchors[-1] != (160.0, 100.0):
            raise ValueError("last anchor must be (160, 100)")
        for (w0, p0), (w1, p1) in zip(self.anchors, self.anchors[1:]):
            if w1 <= w0:
                raise ValueError("anchor volumes must strictly increase")
            if p1 < p0:
                raise ValueError("anchor percents must be non-decreasing")


def moisture_percent(material: MattressMaterial, water_ml: float) -> float:
    """Sensor reading for the given poured-water volume.

    Linear between anchors, clamped at 100% beyond the last anchor.
    """
    if water_ml < 0:
        raise NegativeVolumeError(f"water_ml must be >= 0, got {water_ml}")
    anchors = material.anchors
    if water_ml >= anchors[-1][0]:
        return anchors[-1][1]
    for (w0, p0), (w1, p1) in zip(anchors, anchors[1:]):
        if water_ml <= w1:
            return p0 + (p1 - p0) * (water_ml - w0) / (w1 - w0)
    return anchors[-1][1]  # unreachable; anchors cover [0, 160]


def wetness_alert(pct: float) -> bool:
    """True iff the reading strictly exceeds the 20% comfort threshold."""
    if not 0.0 <= pct <= 100.0:
        raise ValueError(f"moisture percent must be in [0, 100], got {pct}")
    return pct > WETNESS_ALERT_PCT


def _minutes(t: dtime | str) -> float:
    if isinstance(t, str):
        hh, _, mm = t.partition(":")
        t = dtime(int(hh), int(mm or 0))
    return t.hour * 60 + t.minute + t.second / 60


@dataclass(frozen=True)
class SolarTable:
    """Controller voltage by time-of-day bucket and weather condition.

    Night (20:00-06:00) is 0 V for every weather; the curve ramps linearly
    from 0 at 06:00 up to the first bucket and back to 0 at 20:00.
    """

    bucket_minutes: tuple[float, ...]
    volts: dict[str, tuple[float, ...]]
    night_start_min: float = 20 * 60
    night_end_min: float = 6 * 60

    def __post_init__(self) -> None:
        for weather, vals in self.volts.items():
            if weather not in WEATHERS:
                raise ValueError(f"unknown weather {weather!r}")
            if len(vals) != len(self.bucket_minutes):
                raise ValueError("one voltage per bucket required")
            if any(v < 0 for v in vals):
                raise ValueError("voltages must be >= 0")

    def _knots(self, weather: str) -> list[tuple[float, float]]:
        knots = [(self.night_end_min, 0.0)]
        knots += list(zip(self.bucket_minutes, self.volts[weather]))
        knots.append((self.night_start_min, 0.0))
        return knots


def solar_voltage(table: SolarTable, t: dtime | str, weather: str) -> float:
    """Voltage at time-of-day ``t`` ("HH:MM" or datetime.time)."""
    if weather not in WEATHERS:
        raise ValueError(f"unknown weather {weather!r}")
    if weather == "heavy_rain":
        return 0.0
    minutes = _minutes(t)
    if minutes >= table.night_start_min or minutes <= table.night_end_min:
        return 0.0
    knots = table._knots(weather)
    for (m0, v0), (m1, v1) in zip(knots, knots[1:]):
        if minutes <= m1:
            return v0 + (v1 - v0) * (minutes - m0) / (m1 - m0)
    return 0.0


def select_power_source(
    table: SolarTable,
    t: dtime | str,
    weather: str,
    threshold_v: float = SOLAR_OPERATIONAL_VOLTS,
) -> str:
    """"solar" when the panel supplies at least the cut-in voltage, else "mains"."""
    return "solar" if solar_voltage(table, t, weather) >= threshold_v else "mains"


def load_materials(path: str | Path) -> dict[str, MattressMaterial]:
    with open(path) as fh:
        raw = json.load(fh)
    return {
        name: MattressMaterial(name=name, anchors=tuple((float(w), float(p)) for w, p in pairs))
        for name, pairs in raw.items()
    }


def load_solar_table(path: str | Path) -> SolarTable:
    with open(path) as fh:
        raw = json.load(fh)
    return SolarTable(
        bucket_minutes=tuple(_minutes(b) for b in raw["buckets"]),
        volts={w: tuple(float(v) for v in vals) for w, vals in raw["volts"].items()},
        night_start_min=_minutes(raw.get("night_start", "20:00")),
        night_end_min=_minutes(raw.get("night_end", "06:00")),
    )


def _data_path(name: str) -> Path:
    return Path(str(resources.files("cradlewatch").joinpath("data", name)))


def default_materials() -> dict[str, MattressMaterial]:
    return load_materials(_data_path("moisture_anchors.json"))


def default_solar_table() -> SolarTable:
    return load_solar_table(_data_path("solar_table.json"))
