"""Append-only JSON-lines event store with snapshot files.

The event log is the source of truth: every mutation is appended (and
fsynced) before it is acknowledged, events are never rewritten, and the
full service state is a fold over the log. Snapshots (beliefs, network
parameters, reports) are written alongside for convenience but replay never
needs them.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

EVENT_TYPES = (
    "session-created",
    "session-submitted",
    "session-expired",
    "response-recorded",
    "elicitation-recorded",
    "observation-recorded",
    "posterior-updated",
    "training-completed",
    "index-computed",
)


class CorruptLogError(RuntimeError):
    """The event log has a gap, an unordered sequence number, or bad JSON."""


@dataclass(frozen=True)
class EventRecord:
    seq: int
    event_type: str
    payload: dict
    recorded_at: str  # ISO-8601 UTC

    def to_line(self) -> str:
        return (
            json.dumps(
                {
                    "seq": self.seq,
                    "event_type": self.event_type,
                    "payload": self.payload,
                    "recorded_at": self.recorded_at,
                },
                sort_keys=True,
                separators=(",", ":"),
                ensure_ascii=False,
            )
            + "\n"
        )

    @classmethod
    def from_line(cls, line: str) -> "EventRecord":
        raw = json.loads(line)
        return cls(
            seq=int(raw["seq"]),
            event_type=raw["event_type"],
            payload=raw["payload"],
            recorded_at=raw["recorded_at"],
        )


class EventStore:
    """Single-writer append-only log under ``data_dir/events.jsonl``.

    Appends are serialized by a lock and flushed to disk before returning;
    concurrent readers see a consistent snapshot via :meth:`events`.
    """

    def __init__(self, data_dir: str | os.PathLike, clock: Callable[[], datetime] | None = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.data_dir / "events.jsonl"
        self._lock = threading.Lock()
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._events: list[EventRecord] = []
        if self.path.exists():
            self._events = list(self._read_log())

    def _read_log(self) -> Iterator[EventRecord]:
        expected = 1
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = EventRecord.from_line(line)
                except (json.JSONDecodeError, KeyError) as exc:
                    raise CorruptLogError(f"bad event at line {lineno}: {exc}") from exc
                if event.seq != expected:
                    raise CorruptLogError(
                        f"event at line {lineno} has seq {event.seq}, expected {expected}"
                    )
                expected += 1
                yield event

    def append(self, event_type: str, payload: dict) -> EventRecord:
        if event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {event_type!r}")
        with self._lock:
            event = EventRecord(
                seq=len(self._events) + 1,
                event_type=event_type,
                payload=payload,
                recorded_at=self._clock().isoformat(),
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(event.to_line())
                fh.flush()
                os.fsync(fh.fileno())
            self._events.append(event)
            return event

    def events(self) -> list[EventRecord]:
        with self._lock:
            return list(self._events)

    def last_seq(self) -> int:
        with self._lock:
            return len(self._events)

    def write_snapshot(self, name: str, text: str) -> Path:
        path = self.data_dir / name
        path.write_text(text, encoding="utf-8")
        return path
