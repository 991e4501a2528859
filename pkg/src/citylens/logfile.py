"""Append-only event log file: durable appends and crash recovery.

One canonical JSON line per event. An append is acknowledged only after the
line is flushed and fsynced, so any event a client saw confirmed survives a
crash. On recovery a torn final line (no trailing newline — the write died
mid-line) is dropped and trimmed off the file; a malformed line anywhere
else means real corruption and recovery refuses to guess.
"""

from __future__ import annotations

import os
from pathlib import Path

from citylens.errors import CorruptLog, ParseError, StorageFailure
from citylens.sdm.logfmt import decode_event, encode_event
from citylens.sdm.store import EventStore
from citylens.sdm.types import EventRecord


class EventLogFile:
    """Durable appender; create via `open()` or use as a context manager."""

    def __init__(self, path: str | Path, fsync: bool = True):
        self.path = Path(path)
        self._fsync = fsync
        self._fh = None

    def open(self) -> "EventLogFile":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        return self

    def __enter__(self) -> "EventLogFile":
        return self.open()

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def append(self, event: EventRecord) -> None:
        """Write one event line durably; raises StorageFailure on any IO error."""
        if self._fh is None:
            raise StorageFailure("log file is not open")
        line = encode_event(event) + "\n"
        try:
            self._fh.write(line.encode("utf-8"))
            self._fh.flush()
            if self._fsync:
                os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc


def read_log(path: str | Path, trim_torn: bool = True) -> list[EventRecord]:
    """All complete events in the file; drops (and trims) a torn final line.

    Raises CorruptLog for a malformed line that is not the torn tail.
    """
    path = Path(path)
    if not path.exists():
        return []
    raw = path.read_bytes()
    if not raw:
        return []

    torn_tail = not raw.endswith(b"\n")
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()  # the split artifact after a final newline
    complete = lines[:-1] if torn_tail else lines

    events = []
    for n, line in enumerate(complete, start=1):
        try:
            events.append(decode_event(line.decode("utf-8")))
        except (ParseError, UnicodeDecodeError) as exc:
            raise CorruptLog(f"line {n}: {exc}") from None

    if torn_tail:
        # The unterminated tail was never acknowledged; see if it even parses —
        # either way it is dropped, and optionally trimmed off the file.
        if trim_torn:
            keep = len(raw) - len(lines[-1])
            with open(path, "r+b") as fh:
                fh.truncate(keep)
    return events


def recover(path: str | Path) -> EventStore:
    """Rebuild a store by replaying every complete line of the log."""
    store = EventStore()
    for event in read_log(path):
        try:
            store.apply_event(event)
        except Exception as exc:
            raise CorruptLog(f"event {event.event_id} does not apply: {exc}") from None
    return store
