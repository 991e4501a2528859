"""Canonical JSON-line encoding for events.

Every event is one UTF-8 line. Object keys are sorted and separators are
minimal, so encoding the same event always yields byte-identical output —
which is what makes generated logs reproducible and recovery checks simple.
"""

from __future__ import annotations

import json
from typing import Any

from citylens.errors import CityError, ParseError
from citylens.sdm.types import EntityId, EventRecord, EventType, Predicate, RelationRef

_RELATION_TYPES = (EventType.RELATE, EventType.UNRELATE)


def encode_event(event: EventRecord) -> str:
    """Render one event as its canonical JSON line (no trailing newline)."""
    if event.event_type in _RELATION_TYPES:
        ref = event.payload
        payload: dict[str, Any] = {
            "subject": ref.subject.canonical,
            "predicate": ref.predicate.value,
            "object": ref.object.canonical,
        }
    else:
        payload = dict(event.payload)
    doc = {
        "id": event.event_id,
        "ts": event.timestamp,
        "entity": event.entity_id.canonical,
        "type": event.event_type.value,
        "payload": payload,
        "source": event.source,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def decode_event(line: str) -> EventRecord:
    """Parse one JSON line back into an event; raises ParseError if malformed."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return event_from_doc(doc)


def event_from_doc(doc) -> EventRecord:
    """Build an event from its wire/log object form; ParseError if malformed."""
    if not isinstance(doc, dict):
        raise ParseError("event must be a JSON object")

    missing = {"id", "ts", "entity", "type", "payload", "source"} - doc.keys()
    if missing:
        raise ParseError(f"event missing keys: {sorted(missing)}")

    event_id = doc["id"]
    ts = doc["ts"]
    if not isinstance(event_id, int) or isinstance(event_id, bool):
        raise ParseError(f"event id must be an integer, got {event_id!r}")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ParseError(f"event ts must be an integer, got {ts!r}")
    if not isinstance(doc["source"], str):
        raise ParseError("event source must be a string")
    raw_payload = doc["payload"]
    if not isinstance(raw_payload, dict):
        raise ParseError("event payload must be an object")

    try:
        entity = EntityId.parse(doc["entity"])
        event_type = EventType.parse(doc["type"])
        if event_type in _RELATION_TYPES:
            extra = raw_payload.keys() - {"subject", "predicate", "object"}
            missing = {"subject", "predicate", "object"} - raw_payload.keys()
            if extra or missing:
                raise ParseError(f"relation payload keys wrong: missing {sorted(missing)}, extra {sorted(extra)}")
            payload: Any = RelationRef(
                subject=EntityId.parse(raw_payload["subject"]),
                predicate=Predicate.parse(raw_payload["predicate"]),
                object=EntityId.parse(raw_payload["object"]),
            )
        else:
            payload = raw_payload
        return EventRecord(
            event_id=event_id,
            timestamp=ts,
            entity_id=entity,
            event_type=event_type,
            payload=payload,
            source=doc["source"],
        )
    except ParseError:
        raise
    except CityError as exc:
        raise ParseError(str(exc)) from None
