"""Domain types for the spatiotemporal entity store.

Time is integer milliseconds UTC throughout; state and relation validity
intervals are half-open ``[valid_from, valid_to)`` with ``valid_to=None``
meaning open-ended.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

from citylens.errors import CityError

Scalar = Union[str, int, float, bool]


class EntityKind(enum.Enum):
    PERSON = "person"
    COMPANY = "company"
    HOUSE = "house"
    BUILDING = "building"
    ROOM = "room"
    URBAN_COMPONENT = "urban_component"
    URBAN_EVENT = "urban_event"
    ROAD_SEGMENT = "road_segment"
    PIPELINE_SEGMENT = "pipeline_segment"
    SUBWAY_LINE = "subway_line"
    POWER_NODE = "power_node"
    POWER_EDGE = "power_edge"
    ADMIN_REGION = "admin_region"

    @classmethod
    def parse(cls, text: str) -> "EntityKind":
        try:
            return cls(text)
        except ValueError:
            raise CityError(f"unknown entity kind: {text!r}") from None


@dataclass(frozen=True, order=True)
class EntityId:
    """Typed entity identifier with canonical text form ``<kind>:<local_id>``."""

    kind: EntityKind
    local_id: str

    def __post_init__(self):
        if not self.local_id:
            raise CityError("entity local_id must be non-empty")
        if ":" in self.local_id:
            raise CityError(f"entity local_id may not contain ':': {self.local_id!r}")

    @property
    def canonical(self) -> str:
        return f"{self.kind.value}:{self.local_id}"

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        kind_text, sep, local = text.partition(":")
        if not sep:
            raise CityError(f"malformed entity id: {text!r}")
        return cls(EntityKind.parse(kind_text), local)

    def __str__(self) -> str:
        return self.canonical


class EventType(enum.Enum):
    CREATE = "create"
    UPDATE = "update"
    DELETE = "delete"
    RELATE = "relate"
    UNRELATE = "unrelate"

    @classmethod
    def parse(cls, text: str) -> "EventType":
        try:
            return cls(text)
        except ValueError:
            raise CityError(f"unknown event type: {text!r}") from None


class Predicate(enum.Enum):
    LIVES_IN = "lives_in"
    OWNS = "owns"
    PART_OF = "part_of"
    LOCATED_IN = "located_in"
    OPERATES = "operates"
    CONNECTED_TO = "connected_to"

    @classmethod
    def parse(cls, text: str) -> "Predicate":
        try:
            return cls(text)
        except ValueError:
            raise CityError(f"unknown relation predicate: {text!r}") from None


@dataclass(frozen=True)
class RelationRef:
    """The (subject, predicate, object) triple carried by Relate/Unrelate."""

    subject: EntityId
    predicate: Predicate
    object: EntityId


@dataclass(frozen=True)
class SemanticRelation:
    """A typed edge between entities, scoped to a validity interval."""

    subject: EntityId
    predicate: Predicate
    object: EntityId
    valid_from: int
    valid_to: int | None = None

    def __post_init__(self):
        if self.subject == self.object:
            raise CityError("relation subject equals object")
        if self.valid_to is not None and not self.valid_from < self.valid_to:
            raise CityError("relation interval must satisfy from < to or be open")

    def contains(self, t: int) -> bool:
        return self.valid_from <= t and (self.valid_to is None or t < self.valid_to)


def validate_payload(payload: Mapping[str, Scalar]) -> dict[str, Scalar]:
    """Check attribute payloads: scalar values only, finite numbers."""
    out: dict[str, Scalar] = {}
    for key, value in payload.items():
        if not isinstance(key, str) or not key:
            raise CityError(f"attribute name must be a non-empty string: {key!r}")
        if isinstance(value, bool):
            pass
        elif isinstance(value, (int, float)):
            if isinstance(value, float) and not math.isfinite(value):
                raise CityError(f"attribute {key!r} is not finite")
        elif not isinstance(value, str):
            raise CityError(f"attribute {key!r} must be a string, number, or boolean")
        out[key] = value
    return out


@dataclass(frozen=True)
class EventRecord:
    """One log entry: an attribute delta or a relation change for an entity."""

    event_id: int
    timestamp: int
    entity_id: EntityId
    event_type: EventType
    payload: Mapping[str, Scalar] | RelationRef
    source: str = ""

    def __post_init__(self):
        if self.event_id < 1:
            raise CityError("event_id must be a positive integer")
        if self.event_type in (EventType.RELATE, EventType.UNRELATE):
            if not isinstance(self.payload, RelationRef):
                raise CityError(f"{self.event_type.value} payload must be a relation")
            if self.payload.subject != self.entity_id:
                raise CityError("relation events must be addressed to their subject")
        else:
            if isinstance(self.payload, RelationRef):
                raise CityError(f"{self.event_type.value} payload must be an attribute map")
            object.__setattr__(self, "payload", validate_payload(self.payload))


@dataclass(frozen=True)
class StateRecord:
    """An entity's attributes over one validity interval."""

    entity_id: EntityId
    version: int
    valid_from: int
    valid_to: int | None
    attributes: Mapping[str, Scalar] = field(default_factory=dict)

    def contains(self, t: int) -> bool:
        return self.valid_from <= t and (self.valid_to is None or t < self.valid_to)


@dataclass(frozen=True)
class AdminPath:
    """The four-level administrative location of a point or entity."""

    district: EntityId
    street: EntityId
    community: EntityId
    grid_cell: EntityId

    def __post_init__(self):
        for region in (self.district, self.street, self.community, self.grid_cell):
            if region.kind is not EntityKind.ADMIN_REGION:
                raise CityError(f"admin path level must be an admin_region: {region}")

    def levels(self) -> tuple[EntityId, EntityId, EntityId, EntityId]:
        return (self.district, self.street, self.community, self.grid_cell)


ADMIN_LEVELS = ("district", "street", "community", "grid_cell")


@dataclass(frozen=True)
class HouseholdRecord:
    """The fully joined as-of view of one house.

    Every component state is taken at the same time `at`; missing joins are
    None (or empty lists), never errors.
    """

    at: int
    house: StateRecord
    building: StateRecord | None
    owner: StateRecord | None
    residents: tuple[StateRecord, ...]
    admin_path: AdminPath | None
    open_events: tuple[StateRecord, ...]


@dataclass(frozen=True)
class Snapshot:
    """All live entity states as of a single time."""

    at: int
    states: Mapping[EntityId, StateRecord]
