from __future__ import annotations

import http.client
import json
import socket
import time
from importlib import resources

import pytest

from cradlewatch import config as config_mod
from cradlewatch.hub import Hub
from cradlewatch.protocol import SensorEvent, encode_event, encode_hello


def packaged_config_dict() -> dict:
    text = resources.files("cradlewatch").joinpath("data", "hub_config.json").read_text()
    return json.loads(text)


@pytest.fixture
def config_dict(tmp_path):
    raw = packaged_config_dict()
    raw["log_path"] = "hub-log.jsonl"
    raw["device_port"] = 0
    raw["http_port"] = 0
    return raw


@pytest.fixture
def hub_config(tmp_path, config_dict):
    return config_mod.from_dict(config_dict, base_dir=tmp_path)


@pytest.fixture
def live_hub(hub_config):
    hub = Hub(hub_config)
    hub.start()
    yield hub
    hub.stop()


def get_json(port: int, path: str, host: str = "127.0.0.1") -> tuple[int, dict]:
    conn = http.client.HTTPConnection(host, port, timeout=5)
    try:
        conn.request("GET", path)
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read().decode())
    finally:
        conn.close()


def post_json(port: int, path: str, body: bytes = b"", host: str = "127.0.0.1") -> tuple[int, dict]:
    conn = http.client.HTTPConnection(host, port, timeout=5)
    try:
        conn.request("POST", path, body=body)
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read().decode())
    finally:
        conn.close()


def wait_until(predicate, timeout_s: float = 5.0, what: str = "condition") -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(0.002)
    raise AssertionError(f"timed out waiting for {what}")


def wait_processed(hub: Hub, count: int, timeout_s: float = 5.0) -> None:
    wait_until(lambda: hub.events_processed >= count, timeout_s, f"{count} events processed")


class DeviceConn:
    """A simulated device connection speaking the wire protocol."""

    def __init__(self, port: int, device_id: str, host: str = "127.0.0.1"):
        self.device_id = device_id
        self.sock = socket.create_connection((host, port), timeout=5)
        self.sock.sendall(encode_hello(device_id))
        self._rfile = self.sock.makefile("rb")
        self._seq = 0

    def send(self, kind: str, value, ts_ms: int, seq: int | None = None) -> SensorEvent:
        if seq is None:
            self._seq += 1
            seq = self._seq
        event = SensorEvent(device_id=self.device_id, seq=seq, ts_ms=ts_ms, kind=kind, value=value)
        self.sock.sendall(encode_event(event))
        return event

    def send_raw(self, data: bytes) -> None:
        self.sock.sendall(data)

    def recv_line(self, timeout_s: float = 5.0) -> bytes:
        self.sock.settimeout(timeout_s)
        return self._rfile.readline()

    def close(self) -> None:
        try:
            self._rfile.close()
            self.sock.close()
        except OSError:
            pass
