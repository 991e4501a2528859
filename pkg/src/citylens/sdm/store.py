"""Event-sourced entity store with as-of queries.

One append-only event log is the single source of truth for attribute state
and semantic relations. Applying an event atomically publishes a new
`StateRecord`; per-entity histories are tuples of immutable records, so a
reader holding a history reference always sees a consistent past.

Concurrency: one serialized writer, any number of readers. All public
methods take the store lock, which is cheap at this scale and guarantees a
reader never observes a partially applied event.
"""

from __future__ import annotations

import threading
from bisect import bisect_right
from dataclasses import replace

from citylens.errors import (
    DeletedEntity,
    DuplicateCreate,
    InvalidRange,
    OutOfOrderEvent,
    SelfRelation,
    UnknownEntity,
    UnknownRelation,
    WrongKind,
)
from citylens.sdm.types import (
    AdminPath,
    EntityId,
    EntityKind,
    EventRecord,
    EventType,
    HouseholdRecord,
    Predicate,
    RelationRef,
    SemanticRelation,
    Snapshot,
    StateRecord,
)

_LOCATION_CHAIN = (Predicate.LIVES_IN, Predicate.PART_OF, Predicate.LOCATED_IN)


class _RelSpan:
    """Mutable relation row; valid_to is written exactly once, on Unrelate."""

    __slots__ = ("subject", "predicate", "object", "valid_from", "valid_to")

    def __init__(self, subject: EntityId, predicate: Predicate, object: EntityId, valid_from: int):
        self.subject = subject
        self.predicate = predicate
        self.object = object
        self.valid_from = valid_from
        self.valid_to: int | None = None

    def contains(self, t: int) -> bool:
        return self.valid_from <= t and (self.valid_to is None or t < self.valid_to)

    def freeze(self) -> SemanticRelation:
        return SemanticRelation(self.subject, self.predicate, self.object, self.valid_from, self.valid_to)


class EventStore:
    def __init__(self):
        self._lock = threading.RLock()
        self._log: list[EventRecord] = []
        self._hist: dict[EntityId, tuple[StateRecord, ...]] = {}
        self._deleted: dict[EntityId, int] = {}
        self._rels_out: dict[EntityId, list[_RelSpan]] = {}
        self._rels_in: dict[EntityId, list[_RelSpan]] = {}

    # ------------------------------------------------------------- metadata

    @property
    def last_event_id(self) -> int:
        with self._lock:
            return self._log[-1].event_id if self._log else 0

    @property
    def head_time(self) -> int:
        """Timestamp of the newest applied event (0 for an empty store)."""
        with self._lock:
            return self._log[-1].timestamp if self._log else 0

    @property
    def base_time(self) -> int:
        """Timestamp of the oldest applied event (0 for an empty store)."""
        with self._lock:
            return self._log[0].timestamp if self._log else 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._log)

    def events(self) -> tuple[EventRecord, ...]:
        with self._lock:
            return tuple(self._log)

    def entity_ids(self, kind: EntityKind | None = None) -> list[EntityId]:
        with self._lock:
            ids = [e for e in self._hist if kind is None or e.kind is kind]
        ids.sort(key=lambda e: e.canonical)
        return ids

    # ------------------------------------------------------------- mutation

    def check_event(self, event: EventRecord) -> None:
        """Validate an event against the current store without applying it."""
        with self._lock:
            self._check(event)

    def apply_event(self, event: EventRecord) -> StateRecord:
        with self._lock:
            self._check(event)
            ts = event.timestamp
            etype = event.event_type
            entity = event.entity_id

            if etype is EventType.CREATE:
                state = StateRecord(entity, 1, ts, None, dict(event.payload))
                self._hist[entity] = (state,)
            elif etype is EventType.UPDATE:
                hist = self._hist[entity]
                prev = hist[-1]
                closed = replace(prev, valid_to=ts)
                state = StateRecord(entity, prev.version + 1, ts, None, {**prev.attributes, **event.payload})
                self._hist[entity] = hist[:-1] + (closed, state)
            elif etype is EventType.DELETE:
                hist = self._hist[entity]
                state = replace(hist[-1], valid_to=ts)
                self._hist[entity] = hist[:-1] + (state,)
                self._deleted[entity] = ts
            elif etype is EventType.RELATE:
                ref = event.payload
                span = _RelSpan(ref.subject, ref.predicate, ref.object, ts)
                self._rels_out.setdefault(ref.subject, []).append(span)
                self._rels_in.setdefault(ref.object, []).append(span)
                state = self._hist[entity][-1]
            else:  # UNRELATE
                ref = event.payload
                span = self._open_span(ref)
                span.valid_to = ts
                state = self._hist[entity][-1]

            self._log.append(event)
            return state

    def _check(self, event: EventRecord) -> None:
        expected = (self._log[-1].event_id if self._log else 0) + 1
        if event.event_id != expected:
            raise OutOfOrderEvent(f"event id {event.event_id}, expected {expected}")
        if self._log and event.timestamp < self._log[-1].timestamp:
            raise OutOfOrderEvent(
                f"timestamp {event.timestamp} regresses behind {self._log[-1].timestamp}"
            )

        entity = event.entity_id
        etype = event.event_type
        if etype is EventType.CREATE:
            if entity in self._hist:
                raise DuplicateCreate(f"{entity} already created")
            return
        if entity not in self._hist:
            raise UnknownEntity(str(entity))
        if entity in self._deleted:
            raise DeletedEntity(f"{entity} deleted at {self._deleted[entity]}")

        if etype in (EventType.RELATE, EventType.UNRELATE):
            ref = event.payload
            if ref.subject == ref.object:
                raise SelfRelation(str(ref.subject))
            if ref.object not in self._hist:
                raise UnknownEntity(str(ref.object))
            if ref.object in self._deleted:
                raise DeletedEntity(f"{ref.object} deleted at {self._deleted[ref.object]}")
            if etype is EventType.UNRELATE:
                self._open_span(ref)

    def _open_span(self, ref: RelationRef) -> _RelSpan:
        for span in self._rels_out.get(ref.subject, ()):
            if span.valid_to is None and span.predicate is ref.predicate and span.object == ref.object:
                return span
        raise UnknownRelation(f"{ref.subject} {ref.predicate.value} {ref.object} has no open relation")

    # -------------------------------------------------------------- queries

    def exists(self, entity: EntityId) -> bool:
        with self._lock:
            return entity in self._hist

    def state_at(self, entity: EntityId, t: int) -> StateRecord | None:
        with self._lock:
            hist = self._hist.get(entity)
        if not hist:
            return None
        idx = bisect_right(hist, t, key=lambda s: s.valid_from) - 1
        if idx < 0:
            return None
        state = hist[idx]
        return state if state.contains(t) else None

    def history(self, entity: EntityId) -> tuple[StateRecord, ...]:
        with self._lock:
            return self._hist.get(entity, ())

    def deleted_at(self, entity: EntityId) -> int | None:
        with self._lock:
            return self._deleted.get(entity)

    def snapshot_at(self, t: int) -> Snapshot:
        """Snapshot built incrementally from the per-entity histories."""
        with self._lock:
            entities = list(self._hist)
        states = {}
        for entity in entities:
            state = self.state_at(entity, t)
            if state is not None:
                states[entity] = state
        return Snapshot(at=t, states=states)

    def replay_range(self, t0: int, t1: int) -> Snapshot:
        """Fold the log from scratch up to t1 and snapshot the result."""
        if t0 > t1:
            raise InvalidRange(f"t0 {t0} > t1 {t1}")
        fresh = EventStore()
        for event in self.events():
            if event.timestamp > t1:
                break
            fresh.apply_event(event)
        return fresh.snapshot_at(t1)

    def relations_of(
        self,
        entity: EntityId,
        predicate: Predicate | None,
        t: int,
        direction: str = "out",
    ) -> frozenset[SemanticRelation]:
        if direction not in ("out", "in"):
            raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
        with self._lock:
            spans = (self._rels_out if direction == "out" else self._rels_in).get(entity, ())
            return frozenset(
                span.freeze()
                for span in spans
                if span.contains(t) and (predicate is None or span.predicate is predicate)
            )

    # ------------------------------------------------------------ household

    def household_record(self, house: EntityId, t: int) -> HouseholdRecord:
        if house.kind is not EntityKind.HOUSE:
            raise WrongKind(f"{house} is not a house")
        with self._lock:
            state = self.state_at(house, t)
            if state is None:
                raise UnknownEntity(f"{house} does not exist at {t}")

            building = self._join_first(house, Predicate.PART_OF, t, "out", EntityKind.BUILDING)
            owner = self._join_first(house, Predicate.OWNS, t, "in", EntityKind.PERSON)
            residents = self._join_all(house, Predicate.LIVES_IN, t, "in")
            admin_path = self.admin_path_of(house, t)

            open_events: tuple[StateRecord, ...] = ()
            if admin_path is not None:
                events = []
                for rel in self.relations_of(admin_path.grid_cell, Predicate.LOCATED_IN, t, "in"):
                    if rel.subject.kind is EntityKind.URBAN_EVENT:
                        ev_state = self.state_at(rel.subject, t)
                        if ev_state is not None:
                            events.append(ev_state)
                events.sort(key=lambda s: s.entity_id.canonical)
                open_events = tuple(events)

            return HouseholdRecord(
                at=t,
                house=state,
                building=building,
                owner=owner,
                residents=residents,
                admin_path=admin_path,
                open_events=open_events,
            )

    def _join_first(
        self, entity: EntityId, predicate: Predicate, t: int, direction: str, kind: EntityKind
    ) -> StateRecord | None:
        candidates = [
            (rel.object if direction == "out" else rel.subject)
            for rel in self.relations_of(entity, predicate, t, direction)
        ]
        candidates = sorted((c for c in candidates if c.kind is kind), key=lambda e: e.canonical)
        for cand in candidates:
            state = self.state_at(cand, t)
            if state is not None:
                return state
        return None

    def _join_all(self, entity: EntityId, predicate: Predicate, t: int, direction: str) -> tuple[StateRecord, ...]:
        others = sorted(
            ((rel.object if direction == "out" else rel.subject) for rel in self.relations_of(entity, predicate, t, direction)),
            key=lambda e: e.canonical,
        )
        return tuple(s for s in (self.state_at(o, t) for o in others) if s is not None)

    def admin_path_of(self, entity: EntityId, t: int) -> AdminPath | None:
        """Resolve the four-level admin path by following relation chains.

        Walks PartOf/LocatedIn links from the entity until an admin region is
        reached, then climbs LocatedIn through the region hierarchy. Region
        levels come from the regions' own `level` attribute.
        """
        with self._lock:
            region = self._nearest_region(entity, t)
            if region is None:
                return None
            by_level: dict[str, EntityId] = {}
            current: EntityId | None = region
            hops = 0
            while current is not None and hops < 8:
                state = self.state_at(current, t)
                if state is None:
                    break
                level = state.attributes.get("level")
                if isinstance(level, str) and level not in by_level:
                    by_level[level] = current
                parents = sorted(
                    (
                        rel.object
                        for rel in self.relations_of(current, Predicate.LOCATED_IN, t, "out")
                        if rel.object.kind is EntityKind.ADMIN_REGION
                    ),
                    key=lambda e: e.canonical,
                )
                current = parents[0] if parents else None
                hops += 1
            try:
                return AdminPath(
                    district=by_level["district"],
                    street=by_level["street"],
                    community=by_level["community"],
                    grid_cell=by_level["grid_cell"],
                )
            except KeyError:
                return None

    def _nearest_region(self, entity: EntityId, t: int) -> EntityId | None:
        if entity.kind is EntityKind.ADMIN_REGION:
            return entity
        frontier = [entity]
        seen = {entity}
        hops = 0
        while frontier and hops < 8:
            next_frontier: list[EntityId] = []
            for node in frontier:
                for predicate in _LOCATION_CHAIN:
                    for rel in sorted(
                        self.relations_of(node, predicate, t, "out"), key=lambda r: r.object.canonical
                    ):
                        target = rel.object
                        if target.kind is EntityKind.ADMIN_REGION:
                            return target
                        if target not in seen:
                            seen.add(target)
                            next_frontier.append(target)
            frontier = next_frontier
            hops += 1
        return None
