"""Event-sourced semantic data model: entities, relations, as-of state."""

from citylens.sdm.logfmt import decode_event, encode_event, event_from_doc
from citylens.sdm.store import EventStore
from citylens.sdm.types import (
    ADMIN_LEVELS,
    AdminPath,
    EntityId,
    EntityKind,
    EventRecord,
    EventType,
    HouseholdRecord,
    Predicate,
    RelationRef,
    Scalar,
    SemanticRelation,
    Snapshot,
    StateRecord,
    validate_payload,
)

__all__ = [
    "ADMIN_LEVELS",
    "AdminPath",
    "EntityId",
    "EntityKind",
    "EventRecord",
    "EventStore",
    "EventType",
    "HouseholdRecord",
    "Predicate",
    "RelationRef",
    "Scalar",
    "SemanticRelation",
    "Snapshot",
    "StateRecord",
    "decode_event",
    "encode_event",
    "event_from_doc",
    "validate_payload",
]
