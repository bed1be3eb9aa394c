"""The long-running hub: device ingestion, rule processing, guardian HTTP API.

Topology: many device TCP connections and HTTP requests, one processing
sequence. Connection threads decode and enqueue; a single processor thread
owns the surveillance state, appends to the event log, and fans alerts out to
stream subscribers. Subscribers get a bounded buffer each; a subscriber that
falls a full backlog behind is disconnected rather than allowed to block the
processor.

HTTP endpoints:
    GET  /state        dashboard snapshot (plus hub counters and device_port)
    GET  /counters     daily crying/movement counters
    GET  /location     latest stored GPS fix, 404 until one exists
    GET  /events?since=ts   event-log excerpt
    GET  /stream       text/event-stream of alerts, one ``data:`` line each
    POST /cmd          actuator command (wire JSON body) -> 202
    POST /reset-home   manual re-entry, clears outside_home
"""

from __future__ import annotations

import logging
import queue
import signal
import socket
import socketserver
import threading
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from . import tracking
from .config import HubConfig
from .eventlog import EventLog, canonical_json, read_log
from .protocol import (
    Command,
    ProtocolError,
    SensorEvent,
    SequenceGate,
    StaleSequenceError,
    command_from_wire,
    decode_command,
    decode_event,
    decode_hello,
    encode_command,
    event_from_wire,
)
from .rules import NoActuatorRegisteredError, RulesEngine, StateView, UnknownDeviceError

logger = logging.getLogger(__name__)

_STOP = object()


@dataclass
class _Subscriber:
    buffer: queue.Queue
    closed: threading.Event = field(default_factory=threading.Event)


class _DeviceServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    hub: "Hub"


class _DeviceHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        hub: Hub = self.server.hub  # type: ignore[attr-defined]
        hub._track_conn(self.connection)
        device_id: str | None = None
        try:
            for raw in self.rfile:
                line = raw.strip()
                if not line:
                    continue
                hello = decode_hello(line)
                if hello is not None:
                    device_id = hello
                    hub._register_device_conn(hello, self.connection)
                    continue
                try:
                    event = decode_event(line)
                except ProtocolError as exc:
                    logger.warning("dropped bad line from %s: %s", device_id or "?", exc)
                    continue
                if device_id != event.device_id:
                    device_id = event.device_id
                    hub._register_device_conn(device_id, self.connection)
                try:
                    hub.gate.admit(event)
                except StaleSequenceError as exc:
                    logger.info("discarded stale event: %s", exc)
                    continue
                hub._queue.put(("event", event))
        except (ConnectionError, OSError):
            pass
        finally:
            hub._untrack_conn(self.connection, device_id)


class Hub:
    """In-process hub instance. ``start()`` binds ports; ``stop()`` is graceful."""

    def __init__(self, config: HubConfig):
        self.config = config
        self.engine = RulesEngine(
            profile=config.calibration,
            devices=set(config.devices),
            tags=config.tags,
            readers=config.readers,
            actuator_bindings=config.actuator_bindings,
            debounce_ms=config.debounce_ms,
        )
        self.state = self.engine.new_state()
        self.gate = SequenceGate()
        self.log = EventLog(config.log_path)
        self._queue: queue.Queue = queue.Queue()
        self._state_lock = threading.Lock()
        self._subscribers: list[_Subscriber] = []
        self._sub_lock = threading.Lock()
        self._device_conns: dict[str, socket.socket] = {}
        self._open_conns: set[socket.socket] = set()
        self._conn_lock = threading.Lock()
        self.events_processed = 0
        self.alerts_emitted = 0
        self._stopping = threading.Event()
        self._stopped = threading.Event()
        self._device_server: _DeviceServer | None = None
        self._http_server: ThreadingHTTPServer | None = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self._device_server = _DeviceServer(
            (self.config.host, self.config.device_port), _DeviceHandler
        )
        self._device_server.hub = self
        handler = _make_http_handler(self)
        self._http_server = ThreadingHTTPServer((self.config.host, self.config.http_port), handler)
        self._http_server.daemon_threads = True

        for name, target in (
            ("cradlewatch-processor", self._process_loop),
            ("cradlewatch-devices", lambda: self._device_server.serve_forever(poll_interval=0.05)),
            ("cradlewatch-http", lambda: self._http_server.serve_forever(poll_interval=0.05)),
        ):
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)
        logger.info(
            "hub listening: devices on %s:%d, http on %s:%d",
            self.config.host,
            self.device_port,
            self.config.host,
            self.http_port,
        )

    @property
    def device_port(self) -> int:
        assert self._device_server is not None
        return self._device_server.server_address[1]

    @property
    def http_port(self) -> int:
        assert self._http_server is not None
        return self._http_server.server_address[1]

    def stop(self) -> None:
        """Drain the queue, flush the log, close every connection."""
        if self._stopping.is_set():
            self._stopped.wait(timeout=10)
            return
        self._stopping.set()
        self._queue.put(_STOP)
        self._stopped.wait(timeout=10)
        if self._device_server:
            self._device_server.shutdown()
            self._device_server.server_close()
        with self._conn_lock:
            for conn in list(self._open_conns):
                try:
                    conn.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
                try:
                    conn.close()
                except OSError:
                    pass
            self._open_conns.clear()
            self._device_conns.clear()
        with self._sub_lock:
            for sub in self._subscribers:
                sub.closed.set()
            self._subscribers.clear()
        if self._http_server:
            self._http_server.shutdown()
            self._http_server.server_close()
        self.log.close()
        logger.info("hub stopped")

    def run_until_signal(self) -> int:
        """Block the main thread until SIGINT/SIGTERM, then stop cleanly."""
        done = threading.Event()
        signal.signal(signal.SIGINT, lambda *_: done.set())
        signal.signal(signal.SIGTERM, lambda *_: done.set())
        done.wait()
        self.stop()
        return 0

    # -- processing ----------------------------------------------------------

    def _process_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                break
            try:
                self._process_item(item)
            except Exception:
                logger.exception("processor error on %r", item)
        self._stopped.set()

    def _process_item(self, item: tuple) -> None:
        kind = item[0]
        if kind == "event":
            self._process_event(item[1])
        elif kind == "cmd":
            _, command, done, result = item
            self._process_command(command, result)
            done.set()
        elif kind == "reset":
            with self._state_lock:
                tracking.reset_outside_home(self.state.tracking)
            item[1].set()

    def _process_event(self, event: SensorEvent) -> None:
        with self._state_lock:
            try:
                alerts, entries = self.engine.process_event(self.state, event)
            except UnknownDeviceError:
                logger.warning("event from unregistered device %r dropped", event.device_id)
                self.events_processed += 1
                return
            except tracking.UnknownReaderError as exc:
                logger.warning("rfid event names unknown reader %s; dropped", exc)
                self.events_processed += 1
                return
            self.log.append("event", event.wire_dict(), event.ts_ms)
            for entry_kind, payload in entries:
                self.log.append(entry_kind, payload, event.ts_ms)
            for alert in alerts:
                payload = alert.as_dict()
                self.log.append("alert", payload, alert.ts_ms)
                self._fan_out(canonical_json(payload))
                self.alerts_emitted += 1
            self.events_processed += 1

    def _process_command(self, command: Command, result: dict) -> None:
        with self._state_lock:
            try:
                forwarded = self.engine.process_command(self.state, command)
            except NoActuatorRegisteredError as exc:
                result["error"] = f"no actuator registered for {exc}"
                return
            for fwd in forwarded:
                self.log.append("command", fwd.wire_dict(), fwd.ts_ms)
                self._forward(self.engine.device_for_command(fwd), fwd)

    def _forward(self, device_id: str, command: Command) -> None:
        with self._conn_lock:
            conn = self._device_conns.get(device_id)
        if conn is None:
            logger.warning("actuator device %r not connected; command not delivered", device_id)
            return
        try:
            conn.sendall(encode_command(command))
        except OSError as exc:
            logger.warning("forward to %r failed: %s", device_id, exc)

    # -- fan-out ---------------------------------------------------------------

    def _fan_out(self, alert_json: str) -> None:
        with self._sub_lock:
            for sub in self._subscribers:
                if sub.closed.is_set():
                    continue
                try:
                    sub.buffer.put_nowait(alert_json)
                except queue.Full:
                    logger.warning("stream subscriber too slow; disconnecting")
                    sub.closed.set()
            self._subscribers = [s for s in self._subscribers if not s.closed.is_set()]

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(buffer=queue.Queue(maxsize=self.config.stream_backlog))
        with self._sub_lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        sub.closed.set()
        with self._sub_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    # -- connection registry ---------------------------------------------------

    def _track_conn(self, conn: socket.socket) -> None:
        with self._conn_lock:
            self._open_conns.add(conn)

    def _untrack_conn(self, conn: socket.socket, device_id: str | None) -> None:
        with self._conn_lock:
            self._open_conns.discard(conn)
            if device_id and self._device_conns.get(device_id) is conn:
                del self._device_conns[device_id]

    def _register_device_conn(self, device_id: str, conn: socket.socket) -> None:
        with self._conn_lock:
            self._device_conns[device_id] = conn

    # -- views -----------------------------------------------------------------

    def state_json(self) -> dict[str, Any]:
        with self._state_lock:
            view = self.engine.snapshot(self.state)
            payload = view.as_json_dict()
            payload["events_processed"] = self.events_processed
            payload["alerts_emitted"] = self.alerts_emitted
        payload["device_port"] = self.device_port
        return payload

    def counters_json(self) -> dict[str, Any]:
        with self._state_lock:
            c = self.state.counters
            return {
                "crying": c.crying,
                "movement": c.movement,
                "date": c.date.isoformat() if c.date else None,
            }

    def location_json(self) -> dict[str, Any] | None:
        with self._state_lock:
            fix = tracking.get_latest_location(self.state.tracking)
            return fix.as_dict() if fix else None

    def submit_command(self, command: Command, timeout: float = 10.0) -> dict:
        """Enqueue a command and wait for the processor to apply it."""
        done = threading.Event()
        result: dict = {}
        self._queue.put(("cmd", command, done, result))
        if not done.wait(timeout):
            result["error"] = "hub busy or stopping"
        return result

    def submit_reset_home(self, timeout: float = 10.0) -> bool:
        done = threading.Event()
        self._queue.put(("reset", done))
        return done.wait(timeout)


# -- replay ---------------------------------------------------------------------


@dataclass
class ReplayResult:
    view: StateView
    ok: bool
    mismatches: list[str]
    replayed_alerts: list[dict]


def replay(config: HubConfig, log_path: str | Path) -> ReplayResult:
    """Audit a log: refold its events and compare the emitted alerts.

    Events and forwarded commands are replayed through a fresh rules engine;
    every logged alert must match the replay's alert stream byte-for-byte
    under canonical serialization. Manual reset-home actions are not logged,
    so they are invisible to replay (they cannot change the alert stream).

    Scope: one hub session's log. The hub starts from fresh in-memory state
    and appends if the log file already exists, so a file spanning restarts
    is not a single deterministic fold; point serve at a fresh log path per
    session if replay auditing matters.
    """
    engine = RulesEngine(
        profile=config.calibration,
        devices=set(config.devices),
        tags=config.tags,
        readers=config.readers,
        actuator_bindings=config.actuator_bindings,
        debounce_ms=config.debounce_ms,
    )
    state = engine.new_state()
    produced: deque[dict] = deque()
    replayed: list[dict] = []
    mismatches: list[str] = []

    for record in read_log(log_path):
        if record.kind == "event":
            event = event_from_wire(record.payload)
            alerts, _entries = engine.process_event(state, event)
            for alert in alerts:
                produced.append(alert.as_dict())
                replayed.append(alert.as_dict())
        elif record.kind == "command":
            engine.process_command(state, command_from_wire(record.payload))
        elif record.kind == "alert":
            if not produced:
                mismatches.append(f"logged alert not reproduced: {canonical_json(record.payload)}")
                continue
            expected = produced.popleft()
            if canonical_json(expected) != canonical_json(record.payload):
                mismatches.append(
                    f"alert mismatch: log has {canonical_json(record.payload)}, "
                    f"replay produced {canonical_json(expected)}"
                )
    for leftover in produced:
        mismatches.append(f"replay produced unlogged alert: {canonical_json(leftover)}")
    return ReplayResult(
        view=engine.snapshot(state),
        ok=not mismatches,
        mismatches=mismatches,
        replayed_alerts=replayed,
    )


# -- HTTP ------------------------------------------------------------------------


def _make_http_handler(hub: Hub):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args: Any) -> None:
            logger.debug("http: " + fmt, *args)

        def _send_json(self, status: int, obj: Any) -> None:
            body = canonical_json(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            if hub._stopping.is_set():
                self._send_json(503, {"error": "shutting down"})
                return
            url = urlparse(self.path)
            if url.path == "/state":
                self._send_json(200, hub.state_json())
            elif url.path == "/counters":
                self._send_json(200, hub.counters_json())
            elif url.path == "/location":
                fix = hub.location_json()
                if fix is None:
                    self._send_json(404, {"error": "no location fix stored"})
                else:
                    self._send_json(200, fix)
            elif url.path == "/events":
                self._get_events(url.query)
            elif url.path == "/stream":
                self._stream()
            else:
                self._send_json(404, {"error": "unknown path"})

        def do_POST(self) -> None:
            if hub._stopping.is_set():
                self._send_json(503, {"error": "shutting down"})
                return
            url = urlparse(self.path)
            if url.path == "/cmd":
                self._post_cmd()
            elif url.path == "/reset-home":
                hub.submit_reset_home()
                self._send_json(200, {"outside_home": False})
            else:
                self._send_json(404, {"error": "unknown path"})

        def _get_events(self, query: str) -> None:
            params = parse_qs(query)
            try:
                since = int(params.get("since", ["0"])[0])
            except ValueError:
                self._send_json(400, {"error": "since must be an integer"})
                return
            records = [
                r.as_dict()
                for r in read_log(hub.config.log_path, strict=False)
                if r.ts_ms >= since
            ]
            self._send_json(200, {"records": records})

        def _post_cmd(self) -> None:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length)
            try:
                command = decode_command(body)
            except ProtocolError as exc:
                self._send_json(400, {"error": str(exc)})
                return
            result = hub.submit_command(command)
            if "error" in result:
                status = 503 if "stopping" in result["error"] else 400
                self._send_json(status, result)
            else:
                self._send_json(202, {"status": "accepted"})

        def _stream(self) -> None:
            sub = hub.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(b": connected\n\n")
                self.wfile.flush()
                while not (sub.closed.is_set() or hub._stopping.is_set()):
                    try:
                        alert_json = sub.buffer.get(timeout=0.2)
                    except queue.Empty:
                        continue
                    self.wfile.write(b"data: " + alert_json.encode("utf-8") + b"\n\n")
                    self.wfile.flush()
            except (ConnectionError, OSError):
                pass
            finally:
                hub.unsubscribe(sub)
                try:
                    self.connection.close()
                except OSError:
                    pass

    return Handler


def serve(config: HubConfig) -> int:
    """Run a hub until SIGINT/SIGTERM. Returns the process exit code."""
    hub = Hub(config)
    try:
        hub.start()
    except OSError as exc:
        logger.error("cannot bind ports: %s", exc)
        return 2
    return hub.run_until_signal()
