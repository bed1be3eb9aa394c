"""Constant-offset temperature calibration.

A raw sensor is compared against a reference thermometer over a set of sample
pairs; the correction is a single additive offset fitted as the mean residual
(the least-squares optimum for a pure offset).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path


class ZeroReferenceError(ZeroDivisionError):
    """Relative error is undefined against a 0 °C reference reading."""


class EmptySampleSetError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationSample:
    """One (sensor, reference) reading pair in °C."""

    sensor_c: float
    reference_c: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sensor_c) and math.isfinite(self.reference_c)):
            raise ValueError("sample readings must be finite")
        if self.reference_c == 0:
            raise ZeroReferenceError("reference reading must be nonzero")


@dataclass(frozen=True)
class CalibrationProfile:
    """A fitted per-device offset plus the sample pairs that produced it."""

    device_id: str
    offset_c: float
    samples: tuple[CalibrationSample, ...] = field(default=())

    def __post_init__(self) -> None:
        if not math.isfinite(self.offset_c):
            raise ValueError("offset_c must be finite")

    def apply(self, raw_c: float) -> float:
        """Corrected reading: raw + offset."""
        return raw_c + self.offset_c


IDENTITY_PROFILE = CalibrationProfile(device_id="", offset_c=0.0)


def relative_error(sensor_c: float, reference_c: float) -> float:
    """|sensor - reference| / reference, as a percentage."""
    if reference_c == 0:
        raise ZeroReferenceError("reference reading must be nonzero")
    return abs(sensor_c - reference_c) / reference_c * 100.0


def fit_offset(samples: list[CalibrationSample] | tuple[CalibrationSample, ...]) -> float:
    """Mean residual (reference - sensor) over the samples."""
    if not samples:
        raise EmptySampleSetError("cannot fit an offset from zero samples")
    return sum(s.reference_c - s.sensor_c for s in samples) / len(samples)


def fit_profile(device_id: str, samples: list[CalibrationSample]) -> CalibrationProfile:
    return CalibrationProfile(device_id=device_id, offset_c=fit_offset(samples), samples=tuple(samples))


def round_for_display(value: float, digits: int = 2) -> float:
    """Half-up rounding, matching how readings are presented to guardians."""
    q = Decimal(10) ** -digits
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def load_samples_csv(path: str | Path) -> list[CalibrationSample]:
    """Read sample pairs from a CSV with header ``sensor_c,reference_c``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["sensor_c", "reference_c"]:
            raise ValueError(f"{path}: expected header 'sensor_c,reference_c'")
        return [
            CalibrationSample(sensor_c=float(row["sensor_c"]), reference_c=float(row["reference_c"]))
            for row in reader
        ]
