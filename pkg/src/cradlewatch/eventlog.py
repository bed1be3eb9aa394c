"""Append-only JSON-lines event log with canonical serialization.

Canonical form (sorted keys, minimal separators, shortest-round-trip floats)
makes golden logs and replay output byte-comparable. Record timestamps are
clamped monotone so the file is ordered even if a device clock steps back;
payloads keep their own device time untouched.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

LOG_KINDS = ("event", "alert", "command", "counter_archive", "fix")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class LogRecord:
    ts_ms: int
    kind: str
    payload: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        return {"ts": self.ts_ms, "kind": self.kind, "payload": self.payload}


class EventLog:
    """Single-writer append log; every append is one flushed line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._last_ts = 0
        if self.path.exists():
            for record in read_log(self.path, strict=False):
                self._last_ts = max(self._last_ts, record.ts_ms)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, kind: str, payload: dict[str, Any], ts_ms: int) -> LogRecord:
        if kind not in LOG_KINDS:
            raise ValueError(f"unknown log kind {kind!r}")
        with self._lock:
            ts = max(int(ts_ms), self._last_ts)
            self._last_ts = ts
            record = LogRecord(ts_ms=ts, kind=kind, payload=payload)
            self._fh.write(canonical_json(record.as_dict()) + "\n")
            self._fh.flush()
            return record

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                self._fh.close()


def read_log(path: str | Path, strict: bool = True) -> Iterator[LogRecord]:
    """Yield records in file order.

    With strict=False a torn trailing line (reader racing the writer) is
    skipped instead of raising.
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield LogRecord(ts_ms=obj["ts"], kind=obj["kind"], payload=obj["payload"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                if strict:
                    raise ValueError(f"{path}:{lineno}: bad log record: {exc}") from exc
                return
