"""Hub configuration: device/tag/reader registries plus model data paths.

Config is a single JSON file (``--config``). Device and reader entries are
lists so duplicate ids are a startup error rather than silently collapsed
keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import environment
from .calibration import CalibrationProfile, CalibrationSample, fit_offset, load_samples_csv
from .environment import MattressMaterial, SolarTable
from .rules import ACTUATORS, DEFAULT_DEBOUNCE_MS
from .tracking import RfidReaderConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceConfig:
    device_id: str
    role: str  # "sensor" | "actuator"
    kinds: tuple[str, ...] = ()
    actuator: str | None = None


@dataclass
class HubConfig:
    device_port: int
    http_port: int
    devices: dict[str, DeviceConfig]
    tags: frozenset[str]
    readers: dict[str, RfidReaderConfig]
    calibration: CalibrationProfile
    materials: dict[str, MattressMaterial]
    solar: SolarTable
    log_path: Path
    debounce_ms: int = DEFAULT_DEBOUNCE_MS
    stream_backlog: int = 1024
    host: str = "127.0.0.1"

    @property
    def actuator_bindings(self) -> dict[str, str]:
        return {d.actuator: d.device_id for d in self.devices.values() if d.actuator}


def _parse_devices(raw: list[dict]) -> dict[str, DeviceConfig]:
    devices: dict[str, DeviceConfig] = {}
    bound: dict[str, str] = {}
    for entry in raw:
        dev_id = entry.get("id")
        if not dev_id or not isinstance(dev_id, str):
            raise ConfigError("device entry needs a string 'id'")
        if dev_id in devices:
            raise ConfigError(f"duplicate device id {dev_id!r}")
        role = entry.get("role", "sensor")
        if role not in ("sensor", "actuator"):
            raise ConfigError(f"device {dev_id}: role must be sensor or actuator")
        actuator = entry.get("actuator")
        if role == "actuator":
            if actuator not in ACTUATORS:
                raise ConfigError(f"device {dev_id}: actuator must be one of {ACTUATORS}")
            if actuator in bound:
                raise ConfigError(
                    f"actuator {actuator!r} bound to both {bound[actuator]!r} and {dev_id!r}"
                )
            bound[actuator] = dev_id
        devices[dev_id] = DeviceConfig(
            device_id=dev_id,
            role=role,
            kinds=tuple(entry.get("kinds", ())),
            actuator=actuator if role == "actuator" else None,
        )
    return devices


def _parse_readers(raw: list[dict]) -> dict[str, RfidReaderConfig]:
    readers: dict[str, RfidReaderConfig] = {}
    for entry in raw:
        reader_id = entry.get("id")
        if not reader_id or not isinstance(reader_id, str):
            raise ConfigError("reader entry needs a string 'id'")
        if reader_id in readers:
            raise ConfigError(f"duplicate reader id {reader_id!r}")
        readers[reader_id] = RfidReaderConfig(
            reader_id=reader_id,
            zone=entry.get("zone", reader_id),
            is_exit=bool(entry.get("is_exit", False)),
            mount_height_cm=float(entry.get("mount_height_cm", 3.0)),
        )
    return readers


def _parse_calibration(raw: dict | None, base_dir: Path) -> CalibrationProfile:
    if not raw:
        return CalibrationProfile(device_id="", offset_c=0.0)
    device_id = raw.get("device_id", "")
    samples: list[CalibrationSample] = []
    if "samples_csv" in raw:
        samples = load_samples_csv(base_dir / raw["samples_csv"])
    elif "samples" in raw:
        samples = [CalibrationSample(sensor_c=s, reference_c=r) for s, r in raw["samples"]]
    if "offset_c" in raw:
        offset = float(raw["offset_c"])
    elif samples:
        offset = fit_offset(samples)
    else:
        raise ConfigError("calibration needs offset_c, samples, or samples_csv")
    return CalibrationProfile(device_id=device_id, offset_c=offset, samples=tuple(samples))


def from_dict(raw: dict, base_dir: Path | None = None) -> HubConfig:
    base_dir = base_dir or Path.cwd()
    try:
        devices = _parse_devices(raw.get("devices", []))
        readers = _parse_readers(raw.get("readers", []))
        calibration = _parse_calibration(raw.get("calibration"), base_dir)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    anchors_path = raw.get("moisture_anchors_path")
    materials = (
        environment.load_materials(base_dir / anchors_path)
        if anchors_path
        else environment.default_materials()
    )
    solar_path = raw.get("solar_table_path")
    solar = (
        environment.load_solar_table(base_dir / solar_path)
        if solar_path
        else environment.default_solar_table()
    )
    return HubConfig(
        device_port=int(raw.get("device_port", 0)),
        http_port=int(raw.get("http_port", 0)),
        devices=devices,
        tags=frozenset(raw.get("tags", [])),
        readers=readers,
        calibration=calibration,
        materials=materials,
        solar=solar,
        log_path=base_dir / raw.get("log_path", "cradlewatch-log.jsonl"),
        debounce_ms=int(raw.get("debounce_ms", DEFAULT_DEBOUNCE_MS)),
        stream_backlog=int(raw.get("stream_backlog", 1024)),
        host=raw.get("host", "127.0.0.1"),
    )


def from_file(path: str | Path) -> HubConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(raw, base_dir=path.parent)
