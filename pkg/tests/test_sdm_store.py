"""Event store vs a brute-force fold oracle, plus the interval invariants.

The oracle never looks at the store's interval table: it folds the raw
event list front to back for every query. Whatever the store's indexes
and bisects do, they must agree with that.
"""

import pytest
from hypothesis import given, settings, strategies as st

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
from citylens.sdm import (
    EntityId,
    EntityKind,
    EventRecord,
    EventStore,
    EventType,
    Predicate,
    RelationRef,
)

P = EntityKind.PERSON
H = EntityKind.HOUSE


def ev(eid, ts, entity, etype, payload=None, **attrs):
    if etype in (EventType.RELATE, EventType.UNRELATE):
        return EventRecord(eid, ts, entity, etype, payload)
    return EventRecord(eid, ts, entity, etype, attrs if payload is None else payload)


# ------------------------------------------------------------------- oracles


def fold_state_oracle(events, entity, t):
    """Replay the raw list: the as-of state is the last create/update fold
    at or before t, erased again by a delete at or before t."""
    attrs = None
    version = 0
    for event in events:
        if event.timestamp > t or event.entity_id != entity:
            continue
        if event.event_type is EventType.CREATE:
            attrs = dict(event.payload)
            version = 1
        elif event.event_type is EventType.UPDATE:
            attrs = {**attrs, **event.payload}
            version += 1
        elif event.event_type is EventType.DELETE:
            attrs = None
    if attrs is None:
        return None
    return version, attrs


def fold_relations_oracle(events, entity, predicate, t, direction):
    """Open (subject, predicate, object) triples at t, by linear scan."""
    open_spans = {}
    for event in events:
        if event.timestamp > t:
            continue
        if event.event_type is EventType.RELATE:
            ref = event.payload
            open_spans[(ref.subject, ref.predicate, ref.object)] = event.timestamp
        elif event.event_type is EventType.UNRELATE:
            ref = event.payload
            open_spans.pop((ref.subject, ref.predicate, ref.object), None)
    picked = set()
    for (subj, pred, obj), since in open_spans.items():
        if predicate is not None and pred is not predicate:
            continue
        if direction == "out" and subj == entity:
            picked.add((subj, pred, obj))
        elif direction == "in" and obj == entity:
            picked.add((subj, pred, obj))
    return picked


# ------------------------------------------------------- scripted randomness


@st.composite
def event_scripts(draw):
    """A valid random script over a handful of people and houses."""
    rnd = draw(st.randoms(use_true_random=False))
    n_events = draw(st.integers(min_value=10, max_value=120))
    people = [EntityId(P, f"p{i}") for i in range(6)]
    houses = [EntityId(H, f"h{i}") for i in range(3)]
    pool = people + houses

    events = []
    ts = 1_000
    live = set()
    dead = set()
    open_rels = set()

    for _ in range(n_events):
        ts += rnd.choice((0, 0, 1, 3, 10))
        eid = len(events) + 1
        choices = []
        unseen = [e for e in pool if e not in live and e not in dead]
        if unseen:
            choices.append("create")
        if live:
            choices += ["update", "update", "delete"]
        if len(live) >= 2:
            choices.append("relate")
        if open_rels:
            choices.append("unrelate")
        if not choices:  # everything created and deleted already
            break
        op = rnd.choice(choices)

        if op == "create":
            entity = rnd.choice(unseen)
            events.append(ev(eid, ts, entity, EventType.CREATE, size=rnd.randint(1, 9)))
            live.add(entity)
        elif op == "update":
            entity = rnd.choice(sorted(live, key=str))
            payload = {rnd.choice(("size", "tone", "note")): rnd.randint(0, 99)}
            events.append(ev(eid, ts, entity, EventType.UPDATE, payload))
        elif op == "delete":
            entity = rnd.choice(sorted(live, key=str))
            events.append(ev(eid, ts, entity, EventType.DELETE))
            live.discard(entity)
            dead.add(entity)
            for triple in [r for r in open_rels if entity in (r[0], r[2])]:
                open_rels.discard(triple)  # leave dangling spans open: allowed
        elif op == "relate":
            subject, obj = rnd.sample(sorted(live, key=str), 2)
            triple = (subject, Predicate.OWNS, obj)
            if triple in open_rels:
                continue
            events.append(ev(eid, ts, subject, EventType.RELATE, RelationRef(*triple)))
            open_rels.add(triple)
        else:
            triple = rnd.choice(sorted(open_rels, key=str))
            events.append(ev(eid, ts, triple[0], EventType.UNRELATE, RelationRef(*triple)))
            open_rels.discard(triple)
    return events


@settings(max_examples=60, deadline=None)
@given(event_scripts())
def test_state_at_matches_fold_oracle(events):
    store = EventStore()
    for event in events:
        store.apply_event(event)
    probes = sorted({e.timestamp for e in events} | {999, 1_001, events[-1].timestamp + 50})
    entities = {e.entity_id for e in events}
    for entity in entities:
        for t in probes:
            expected = fold_state_oracle(events, entity, t)
            state = store.state_at(entity, t)
            if expected is None:
                assert state is None
            else:
                assert state is not None
                assert (state.version, dict(state.attributes)) == expected


@settings(max_examples=40, deadline=None)
@given(event_scripts())
def test_relations_match_fold_oracle(events):
    store = EventStore()
    for event in events:
        store.apply_event(event)
    probes = sorted({e.timestamp for e in events})[::3] + [events[-1].timestamp + 1]
    entities = {e.entity_id for e in events}
    for entity in entities:
        for t in probes:
            for direction in ("out", "in"):
                got = {
                    (r.subject, r.predicate, r.object)
                    for r in store.relations_of(entity, None, t, direction)
                }
                assert got == fold_relations_oracle(events, entity, None, t, direction)


@settings(max_examples=40, deadline=None)
@given(event_scripts())
def test_history_intervals_partition_time(events):
    store = EventStore()
    for event in events:
        store.apply_event(event)
    for entity in {e.entity_id for e in events}:
        history = store.history(entity)
        if not history:
            continue
        for i, state in enumerate(history):
            assert state.version == i + 1  # versions count up from 1, no gaps
            if state.valid_to is not None:
                assert state.valid_from <= state.valid_to
        for prev, after in zip(history, history[1:]):
            assert prev.valid_to == after.valid_from  # no gap, no overlap
        if store.deleted_at(entity) is None:
            assert history[-1].valid_to is None
        else:
            assert history[-1].valid_to == store.deleted_at(entity)


@settings(max_examples=25, deadline=None)
@given(event_scripts(), st.integers(min_value=0, max_value=200))
def test_replay_range_agrees_with_snapshot(events, offset):
    # a replayed prefix can't know when a state will be closed by later
    # events, so equality is on the as-of content, not on valid_to
    def content(snapshot):
        return {
            entity: (s.version, s.valid_from, dict(s.attributes))
            for entity, s in snapshot.states.items()
        }

    store = EventStore()
    for event in events:
        store.apply_event(event)
    t1 = 1_000 + offset
    assert content(store.replay_range(0, t1)) == content(store.snapshot_at(t1))


# ------------------------------------------------------------ ordering rules


def test_event_ids_must_be_dense():
    store = EventStore()
    store.apply_event(ev(1, 10, EntityId(P, "a"), EventType.CREATE))
    with pytest.raises(OutOfOrderEvent):
        store.apply_event(ev(3, 11, EntityId(P, "b"), EventType.CREATE))


def test_timestamp_regression_rejected():
    store = EventStore()
    store.apply_event(ev(1, 100, EntityId(P, "a"), EventType.CREATE))
    with pytest.raises(OutOfOrderEvent):
        store.apply_event(ev(2, 99, EntityId(P, "b"), EventType.CREATE))


def test_equal_timestamps_allowed_log_order_wins():
    store = EventStore()
    a = EntityId(P, "a")
    store.apply_event(ev(1, 100, a, EventType.CREATE, size=1))
    store.apply_event(ev(2, 100, a, EventType.UPDATE, size=2))
    state = store.state_at(a, 100)
    assert state.version == 2
    assert state.attributes["size"] == 2


def test_duplicate_create_rejected():
    store = EventStore()
    a = EntityId(P, "a")
    store.apply_event(ev(1, 10, a, EventType.CREATE))
    with pytest.raises(DuplicateCreate):
        store.apply_event(ev(2, 11, a, EventType.CREATE))


def test_update_unknown_entity_rejected():
    store = EventStore()
    with pytest.raises(UnknownEntity):
        store.apply_event(ev(1, 10, EntityId(P, "ghost"), EventType.UPDATE, x=1))


def test_mutating_deleted_entity_rejected():
    store = EventStore()
    a = EntityId(P, "a")
    store.apply_event(ev(1, 10, a, EventType.CREATE))
    store.apply_event(ev(2, 20, a, EventType.DELETE))
    with pytest.raises(DeletedEntity):
        store.apply_event(ev(3, 30, a, EventType.UPDATE, x=1))


def test_check_event_does_not_mutate():
    store = EventStore()
    a = EntityId(P, "a")
    store.check_event(ev(1, 10, a, EventType.CREATE))
    assert len(store) == 0
    assert store.state_at(a, 10) is None


def test_replay_range_rejects_reversed_bounds():
    store = EventStore()
    with pytest.raises(InvalidRange):
        store.replay_range(10, 9)


# ------------------------------------------------------------------ relations


def _two_people():
    store = EventStore()
    a = EntityId(P, "a")
    b = EntityId(P, "b")
    store.apply_event(ev(1, 10, a, EventType.CREATE))
    store.apply_event(ev(2, 10, b, EventType.CREATE))
    return store, a, b


def test_relate_is_visible_from_both_ends():
    store, a, b = _two_people()
    store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    outgoing = store.relations_of(a, Predicate.OWNS, 25, "out")
    incoming = store.relations_of(b, Predicate.OWNS, 25, "in")
    assert {(r.subject, r.object) for r in outgoing} == {(a, b)}
    assert outgoing == incoming


def test_relation_interval_is_half_open():
    store, a, b = _two_people()
    store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    store.apply_event(ev(4, 30, a, EventType.UNRELATE, RelationRef(a, Predicate.OWNS, b)))
    assert not store.relations_of(a, Predicate.OWNS, 19, "out")
    assert store.relations_of(a, Predicate.OWNS, 20, "out")
    assert store.relations_of(a, Predicate.OWNS, 29, "out")
    assert not store.relations_of(a, Predicate.OWNS, 30, "out")


def test_relations_do_not_bump_entity_versions():
    store, a, b = _two_people()
    before = store.state_at(a, 50).version
    store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    store.apply_event(ev(4, 30, a, EventType.UNRELATE, RelationRef(a, Predicate.OWNS, b)))
    assert store.state_at(a, 50).version == before
    assert store.state_at(b, 50).version == before


def test_self_relation_rejected():
    store, a, _ = _two_people()
    with pytest.raises(SelfRelation):
        store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, a)))


def test_unrelate_without_open_span_rejected():
    store, a, b = _two_people()
    with pytest.raises(UnknownRelation):
        store.apply_event(ev(3, 20, a, EventType.UNRELATE, RelationRef(a, Predicate.OWNS, b)))


def test_duplicate_relate_opens_a_second_span():
    # not an error: each Relate opens its own span, Unrelate closes the
    # earliest open match
    store, a, b = _two_people()
    store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    store.apply_event(ev(4, 25, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    assert len(store.relations_of(a, Predicate.OWNS, 26, "out")) == 2
    store.apply_event(ev(5, 30, a, EventType.UNRELATE, RelationRef(a, Predicate.OWNS, b)))
    remaining = store.relations_of(a, Predicate.OWNS, 35, "out")
    assert {r.valid_from for r in remaining} == {25}


def test_relation_can_reopen_after_unrelate():
    store, a, b = _two_people()
    store.apply_event(ev(3, 20, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    store.apply_event(ev(4, 30, a, EventType.UNRELATE, RelationRef(a, Predicate.OWNS, b)))
    store.apply_event(ev(5, 40, a, EventType.RELATE, RelationRef(a, Predicate.OWNS, b)))
    assert not store.relations_of(a, Predicate.OWNS, 35, "out")
    assert store.relations_of(a, Predicate.OWNS, 45, "out")


# ---------------------------------------------------------- joined households


def test_household_record_joins_generated_city(small_runtime):
    store = small_runtime.store
    t = store.head_time
    house = EntityId(H, "h1")
    record = store.household_record(house, t)

    assert record.house.entity_id == house
    assert record.building is not None
    assert record.building.entity_id.kind is EntityKind.BUILDING
    assert record.owner is not None
    assert record.owner.entity_id.kind is EntityKind.PERSON
    assert record.residents, "generated houses are occupied"
    assert all(s.entity_id.kind is EntityKind.PERSON for s in record.residents)
    # the owner lives there too, by construction of the generator
    assert record.owner.entity_id in {s.entity_id for s in record.residents}
    assert record.admin_path is not None
    for level in record.admin_path.levels():
        assert level.kind is EntityKind.ADMIN_REGION
    # every joined state is the same as-of time
    for state in (record.house, record.building, record.owner, *record.residents):
        assert state.contains(t)


def test_household_record_requires_a_house(small_runtime):
    store = small_runtime.store
    with pytest.raises(WrongKind):
        store.household_record(EntityId(P, "p1"), store.head_time)


def test_household_record_unknown_house(small_runtime):
    store = small_runtime.store
    with pytest.raises(UnknownEntity):
        store.household_record(EntityId(H, "nope"), store.head_time)


def test_admin_path_resolves_for_people(small_runtime):
    store = small_runtime.store
    t = store.head_time
    path = store.admin_path_of(EntityId(P, "p1"), t)
    assert path is not None
    assert [r.kind for r in path.levels()] == [EntityKind.ADMIN_REGION] * 4
