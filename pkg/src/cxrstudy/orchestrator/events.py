"""Append-only event log with a versioned JSONL file format.

Line 1 is a header record {"event_log_version": 1}; every further line is
one event {seq, event_type, at_wall, at_mono, payload}. The log is the
single source of truth: folding the events from an empty state must
reconstruct the engine state exactly.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

__all__ = ["EVENT_LOG_VERSION", "Event", "EventLog", "read_event_log"]

EVENT_LOG_VERSION = 1


@dataclass(frozen=True)
class Event:
    seq: int
    event_type: str
    at_wall: float
    at_mono: float
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "event_type": self.event_type,
             "at_wall": self.at_wall, "at_mono": self.at_mono,
             "payload": self.payload},
            sort_keys=True, ensure_ascii=False,
        )

    @staticmethod
    def from_dict(rec: dict) -> "Event":
        return Event(int(rec["seq"]), str(rec["event_type"]),
                     float(rec["at_wall"]), float(rec["at_mono"]),
                     dict(rec["payload"]))


class EventLog:
    """In-memory event sequence, optionally persisted to a JSONL file.

    Opening a path that already holds a log resumes it: the prior events
    are loaded so sequence numbers continue where the file left off.
    """

    def __init__(self, path: str | Path | None = None, durable: bool = True):
        self._events: list[Event] = []
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._durable = durable
        self._fh = None
        if self._path is not None:
            fresh = not self._path.exists() or self._path.stat().st_size == 0
            if not fresh:
                self._events = read_event_log(self._path)
            self._fh = open(self._path, "a", encoding="utf-8")
            if fresh:
                self._fh.write(json.dumps({"event_log_version": EVENT_LOG_VERSION}) + "\n")
                self._fh.flush()

    @property
    def next_seq(self) -> int:
        with self._lock:
            return len(self._events) + 1

    def append(self, event: Event) -> None:
        with self._lock:
            expected = len(self._events) + 1
            if event.seq != expected:
                raise ValueError(f"event seq {event.seq} out of order, expected {expected}")
            self._events.append(event)
            if self._fh is not None:
                self._fh.write(event.to_json() + "\n")
                self._fh.flush()
                if self._durable:
                    # live-service default: one fsync per event. Batch
                    # tools (the simulator) pass durable=False and fsync
                    # once on close instead.
                    os.fsync(self._fh.fileno())

    def events(self) -> tuple[Event, ...]:
        with self._lock:
            return tuple(self._events)

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()
                self._fh = None


def read_event_log(path: str | Path) -> list[Event]:
    """Load a persisted event log, checking the version header."""
    events: list[Event] = []
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            return events
        header = json.loads(header_line)
        version = header.get("event_log_version")
        if version != EVENT_LOG_VERSION:
            raise ValueError(f"unsupported event log version {version!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(Event.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad event record: {exc}") from exc
    return events
