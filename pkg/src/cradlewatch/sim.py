"""Deterministic device-farm simulator and scenario runner.

A scenario is a JSON timeline of raw sensor events and generator directives
(cry episodes, mattress wetting, reader passes, GPS tracks, solar weather).
Directives expand deterministically from the scenario seed and the
environment models, so the wire traffic is reproducible from the file alone.

The runner drives a live hub over the real TCP wire protocol, one connection
per simulated device, while listening to the hub's ``/stream``. After every
event it waits for the hub to report the event processed (``events_processed``
in ``GET /state``), which pins the hub's processing order to the timeline
order; transcripts are therefore byte-identical across runs at any speed
setting. The speed multiplier only compresses the real sleeps between
timeline items.
"""

from __future__ import annotations

import http.client
import json
import logging
import math
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import environment
from .environment import moisture_percent, solar_voltage
from .eventlog import canonical_json
from .protocol import SensorEvent, encode_event, encode_hello
from .rng import Xorshift64Star
from .tracking import rfid_detect

logger = logging.getLogger(__name__)

SCENARIO_VERSION = 1

DIRECTIVES = ("baby_cries", "wet_mattress", "pass_reader", "gps_track", "solar_weather")


class ScenarioSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    speed: float
    devices: dict[str, tuple[str, ...]]
    timeline: tuple[dict[str, Any], ...]

    @property
    def device_ids(self) -> list[str]:
        return sorted(self.devices)


def load_scenario(path: str | Path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioSchemaError(f"{path}: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict[str, Any]) -> Scenario:
    if raw.get("v") != SCENARIO_VERSION:
        raise ScenarioSchemaError(f"scenario version must be {SCENARIO_VERSION}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioSchemaError("scenario needs a non-empty 'name'")
    devices = raw.get("devices")
    if not isinstance(devices, dict) or not devices:
        raise ScenarioSchemaError("scenario needs a 'devices' map")
    timeline = raw.get("timeline", [])
    prev_at = None
    for i, item in enumerate(timeline):
        if "at_ms" not in item:
            raise ScenarioSchemaError(f"timeline[{i}]: missing at_ms")
        if prev_at is not None and item["at_ms"] < prev_at:
            raise ScenarioSchemaError(f"timeline[{i}]: at_ms must be non-decreasing")
        prev_at = item["at_ms"]
        device = item.get("device")
        if device not in devices:
            raise ScenarioSchemaError(f"timeline[{i}]: unknown device {device!r}")
        directive = item.get("directive")
        if directive is not None and directive not in DIRECTIVES:
            raise ScenarioSchemaError(f"timeline[{i}]: unknown directive {directive!r}")
        if directive is None and "kind" not in item:
            raise ScenarioSchemaError(f"timeline[{i}]: needs 'kind' or 'directive'")
    return Scenario(
        name=name,
        seed=int(raw.get("seed", 0)),
        speed=float(raw.get("speed", 1.0)),
        devices={d: tuple(kinds) for d, kinds in devices.items()},
        timeline=tuple(timeline),
    )


# -- timeline expansion -------------------------------------------------------


def _expand_item(
    item: dict[str, Any],
    materials: dict[str, environment.MattressMaterial],
    solar: environment.SolarTable,
) -> list[tuple[int, str, str, Any]]:
    """Expand one timeline item into (at_ms, device, kind, value) tuples."""
    at = int(item["at_ms"])
    device = item["device"]
    directive = item.get("directive")
    if directive is None:
        return [(at, device, item["kind"], item["value"])]
    if directive == "baby_cries":
        duration = int(item.get("duration_ms", 4000))
        return [(at, device, "sound", True), (at + duration, device, "sound", False)]
    if directive == "wet_mattress":
        material = materials[item["material"]]
        pct = moisture_percent(material, float(item["water_ml"]))
        return [(at, device, "moisture_pct", pct)]
    if directive == "pass_reader":
        if not rfid_detect(item["posture"], float(item["distance_cm"])):
            return []
        value = {"tag": item["tag"], "reader": item["reader"]}
        return [(at, device, "rfid_read", value)]
    if directive == "gps_track":
        interval = int(item.get("interval_ms", 1000))
        return [
            (at + i * interval, device, "gps_fix", {"lat": float(lat), "lon": float(lon)})
            for i, (lat, lon) in enumerate(item["points"])
        ]
    if directive == "solar_weather":
        interval = int(item.get("interval_ms", 1000))
        weather = item["weather"]
        return [
            (at + i * interval, device, "solar_v", solar_voltage(solar, t, weather))
            for i, t in enumerate(item["times"])
        ]
    raise ScenarioSchemaError(f"unknown directive {directive!r}")


def expand_timeline(
    scenario: Scenario,
    materials: dict[str, environment.MattressMaterial] | None = None,
    solar: environment.SolarTable | None = None,
) -> list[SensorEvent]:
    """Deterministic wire events for the scenario, in send order."""
    materials = materials or environment.default_materials()
    solar = solar or environment.default_solar_table()
    expanded: list[tuple[int, str, str, Any]] = []
    for item in scenario.timeline:
        try:
            expanded.extend(_expand_item(item, materials, solar))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioSchemaError(f"timeline item {item!r}: {exc}") from exc
    expanded.sort(key=lambda tup: tup[0])  # stable: equal at_ms keeps file order
    seqs: dict[str, int] = {}
    events = []
    for at, device, kind, value in expanded:
        seqs[device] = seqs.get(device, 0) + 1
        events.append(
            SensorEvent(device_id=device, seq=seqs[device], ts_ms=at, kind=kind, value=value)
        )
    return events


def gen_baby(
    seed: int,
    duration_ms: int,
    mean_interval_ms: int = 600_000,
    cry_device: str = "cot-mic",
    motion_device: str = "cot-motion",
    cry_duration_ms: int = 4000,
    motion_pulse_ms: int = 2000,
) -> list[dict[str, Any]]:
    """Background cry/movement episodes with exponential inter-arrival times.

    Same seed, same fragment; zero duration means no episodes.
    """
    rng = Xorshift64Star(seed)
    t = 0.0
    items: list[dict[str, Any]] = []
    while True:
        t += -float(mean_interval_ms) * math.log(1.0 - rng.uniform())
        if t >= duration_ms:
            break
        at = int(t)
        if rng.uniform() < 0.5:
            items.append(
                {"at_ms": at, "device": cry_device, "directive": "baby_cries", "duration_ms": cry_duration_ms}
            )
        else:
            items.append({"at_ms": at, "device": motion_device, "kind": "motion_cot", "value": True})
            items.append(
                {"at_ms": at + motion_pulse_ms, "device": motion_device, "kind": "motion_cot", "value": False}
            )
    return items


# -- HTTP plumbing --------------------------------------------------------------


class SimError(RuntimeError):
    pass


def _get_json(host: str, port: int, path: str, timeout: float = 5.0) -> tuple[int, Any]:
    conn = http.client.HTTPConnection(host, port, timeout=timeout)
    try:
        conn.request("GET", path)
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read().decode("utf-8"))
    finally:
        conn.close()


def _post_json(host: str, port: int, path: str, body: bytes, timeout: float = 5.0) -> tuple[int, Any]:
    conn = http.client.HTTPConnection(host, port, timeout=timeout)
    try:
        conn.request("POST", path, body=body, headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read().decode("utf-8"))
    finally:
        conn.close()


class StreamListener:
    """Collects ``data:`` alert payloads from the hub's /stream in order."""

    def __init__(self, host: str, port: int):
        self._conn = http.client.HTTPConnection(host, port)
        self._conn.request("GET", "/stream")
        # http.client drops its socket reference for unbounded responses;
        # keep one so close() can wake the reader thread.
        self._sock = self._conn.sock
        self._resp = self._conn.getresponse()
        if self._resp.status != 200:
            raise SimError(f"/stream returned {self._resp.status}")
        self.alerts: list[dict[str, Any]] = []
        self._lock = threading.Lock()
        self._thread = threading.Thread(target=self._read_loop, daemon=True)
        self._thread.start()

    def _read_loop(self) -> None:
        try:
            for raw in self._resp:
                if raw.startswith(b"data: "):
                    payload = json.loads(raw[len(b"data: ") :].decode("utf-8"))
                    with self._lock:
                        self.alerts.append(payload)
        except (OSError, ValueError):
            pass

    def count(self) -> int:
        with self._lock:
            return len(self.alerts)

    def snapshot(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self.alerts)

    def close(self) -> None:
        # shutdown() wakes the reader thread out of its blocking recv
        try:
            if self._sock is not None:
                self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._conn.close()
        except OSError:
            pass
        self._thread.join(timeout=2)


# -- the runner ------------------------------------------------------------------


def _wait_until(predicate, timeout_s: float, what: str) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(0.002)
    raise SimError(f"timed out waiting for {what}")


def run(
    scenario: Scenario,
    host: str,
    http_port: int,
    speed: float | None = None,
    timeout_s: float = 30.0,
) -> dict[str, Any]:
    """Play the scenario against a live hub; returns the transcript dict."""
    speed = speed if speed is not None else scenario.speed
    status, state = _get_json(host, http_port, "/state")
    if status != 200:
        raise SimError(f"hub /state returned {status}")
    device_port = state["device_port"]
    base_processed = state["events_processed"]
    base_alerts = state["alerts_emitted"]

    events = expand_timeline(scenario)
    listener = StreamListener(host, http_port)
    conns: dict[str, socket.socket] = {}
    try:
        for device_id in scenario.device_ids:
            sock = socket.create_connection((host, device_port), timeout=5)
            sock.sendall(encode_hello(device_id))
            conns[device_id] = sock

        prev_at = events[0].ts_ms if events else 0
        for i, event in enumerate(events):
            if speed > 0:
                time.sleep(max(0.0, (event.ts_ms - prev_at) / 1000.0 / speed))
            prev_at = event.ts_ms
            conns[event.device_id].sendall(encode_event(event))
            want = base_processed + i + 1
            _wait_until(
                lambda: _get_json(host, http_port, "/state")[1]["events_processed"] >= want,
                timeout_s,
                f"hub to process event {i + 1}/{len(events)}",
            )

        _, final_state = _get_json(host, http_port, "/state")
        expected_alerts = final_state["alerts_emitted"] - base_alerts
        _wait_until(
            lambda: listener.count() >= expected_alerts,
            timeout_s,
            f"{expected_alerts} alerts on /stream",
        )
        _, counters = _get_json(host, http_port, "/counters")
        loc_status, location = _get_json(host, http_port, "/location")
        return {
            "v": 1,
            "scenario": scenario.name,
            "seed": scenario.seed,
            "sent": [e.wire_dict() for e in events],
            "alerts": listener.snapshot(),
            "final": {
                "counters": counters,
                "location": location if loc_status == 200 else None,
            },
        }
    finally:
        for sock in conns.values():
            try:
                sock.close()
            except OSError:
                pass
        listener.close()


def write_transcript(transcript: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(canonical_json(transcript) + "\n")


# -- expectation checking ----------------------------------------------------------


@dataclass
class CheckReport:
    ok: bool
    failures: list[str] = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return "PASS"
        return "FAIL\n" + "\n".join(f"  - {f}" for f in self.failures)


def check(transcript: dict[str, Any], expected: dict[str, Any]) -> CheckReport:
    """Match the transcript's alerts and final counters against expectations.

    Alerts must match one-to-one in order; each expected entry allows a
    timestamp tolerance window. Unexpected or missing alerts are listed.
    """
    failures: list[str] = []
    got = transcript.get("alerts", [])
    want = expected.get("alerts", [])
    for i in range(max(len(got), len(want))):
        if i >= len(got):
            w = want[i]
            failures.append(f"missing expected alert #{i}: {w['type']} near t={w['at_ms']}ms")
            continue
        if i >= len(want):
            g = got[i]
            failures.append(f"unexpected alert #{i}: {g['type']} at t={g['ts']}ms")
            continue
        g, w = got[i], want[i]
        if g["type"] != w["type"]:
            failures.append(f"alert #{i}: expected type {w['type']}, got {g['type']}")
        tol = int(w.get("tol_ms", 0))
        if tol < 0:
            raise ScenarioSchemaError(f"expected alert #{i}: tol_ms must be >= 0")
        if abs(g["ts"] - w["at_ms"]) > tol:
            failures.append(
                f"alert #{i} ({g['type']}): ts {g['ts']}ms outside {w['at_ms']}±{tol}ms"
            )
    for key, value in expected.get("counters", {}).items():
        actual = transcript.get("final", {}).get("counters", {}).get(key)
        if actual != value:
            failures.append(f"counter {key}: expected {value}, got {actual}")
    if "location" in expected:
        actual_loc = transcript.get("final", {}).get("location")
        want_loc = expected["location"]
        if (actual_loc is None) != (want_loc is None):
            failures.append(f"location: expected {want_loc}, got {actual_loc}")
        elif want_loc is not None and actual_loc is not None:
            if abs(actual_loc["lat"] - want_loc["lat"]) > 1e-9 or abs(
                actual_loc["lon"] - want_loc["lon"]
            ) > 1e-9:
                failures.append(f"location: expected {want_loc}, got {actual_loc}")
    return CheckReport(ok=not failures, failures=failures)


def load_expected(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioSchemaError(f"{path}: {exc}") from exc
