"""Deterministic synthetic city generation.

Every value is drawn from one splitmix64 stream in a fixed order, so a seed
pins the full dataset byte-for-byte. Admin regions form a regular 4-level
rectangular subdivision of the city box; buildings sit on a jittered
lattice; households, persons, companies, infrastructure, and a handful of
urban events hang off them through Relate events. Late update events give
the log some history to replay.

Output is a pair of files: the event log (one canonical JSON line per
event) and a geometry sidecar mapping entity ids to render geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from citylens.errors import InvalidSpec
from citylens.geo import (
    AdminRegions,
    BBox,
    Footprint,
    Geometry,
    GeoPoint,
    PointGeom,
    Polyline,
    M_PER_DEG_LAT,
)
from citylens.rng import SplitMix64
from citylens.sdm.types import ADMIN_LEVELS, EntityId, EntityKind, EventRecord, EventType, Predicate, RelationRef
from citylens.scene import lod_min_zoom

T_BASE = 1_600_000_000_000
HOUR_MS = 3_600_000
DAY_MS = 86_400_000

DEFAULT_BBOX = BBox(113.90, 22.45, 114.30, 22.75)

DEFAULT_COUNTS = {
    "districts": 2,
    "streets_per_district": 2,
    "communities_per_street": 2,
    "grids_per_community": 2,
    "buildings": 50,
    "households_per_building": 2,
    "persons_per_household": 2.5,
    "road_segments": 12,
    "pipeline_segments": 8,
    "subway_lines": 2,
    "power_nodes": 12,
    "companies": 10,
    "urban_events": 6,
}

_HIERARCHY_KEYS = ("districts", "streets_per_district", "communities_per_street", "grids_per_community")
_FLOAT_KEYS = ("persons_per_household",)


@dataclass(frozen=True)
class GenSpec:
    seed: int
    counts: dict[str, float] = field(default_factory=dict)
    bbox: BBox = DEFAULT_BBOX

    def __post_init__(self):
        if self.seed < 0:
            raise InvalidSpec("seed must be a non-negative integer")
        merged = dict(DEFAULT_COUNTS)
        for key, value in self.counts.items():
            if key not in DEFAULT_COUNTS:
                raise InvalidSpec(f"unknown count key {key!r}")
            if value < 0:
                raise InvalidSpec(f"count {key} is negative")
            merged[key] = float(value) if key in _FLOAT_KEYS else int(value)
        for key in _HIERARCHY_KEYS:
            if merged[key] < 1:
                raise InvalidSpec(f"{key} must be >= 1 to produce 4 admin levels")
        if self.bbox.min_lon >= self.bbox.max_lon or self.bbox.min_lat >= self.bbox.max_lat:
            raise InvalidSpec("city bbox must have positive extent")
        object.__setattr__(self, "counts", merged)


@dataclass(frozen=True)
class SceneGeometry:
    """Sidecar record: how an entity is drawn."""

    geometry: Geometry
    layer_id: str
    height_m: float = 0.0


@dataclass
class GeneratedCity:
    spec: GenSpec
    events: list[EventRecord]
    geometry: dict[EntityId, SceneGeometry]
    regions: AdminRegions


def _near_square(n: int) -> tuple[int, int]:
    """(rows, cols) with rows*cols == n, as square as n's divisors allow."""
    r = max(1, int(math.isqrt(n)))
    while n % r:
        r -= 1
    return r, n // r


def _edge(lo: float, hi: float, i: int, n: int) -> float:
    # Endpoint-exact lerp: i=0 gives lo, i=n gives hi, so sibling and
    # parent/child rectangles share edges bit-for-bit.
    return lo + (hi - lo) * (i / n)


def _split_box(box: BBox, n: int) -> list[BBox]:
    rows, cols = _near_square(n)
    cells = []
    for r in range(rows):
        for c in range(cols):
            cells.append(
                BBox(
                    _edge(box.min_lon, box.max_lon, c, cols),
                    _edge(box.min_lat, box.max_lat, r, rows),
                    _edge(box.min_lon, box.max_lon, c + 1, cols),
                    _edge(box.min_lat, box.max_lat, r + 1, rows),
                )
            )
    return cells


def _rect_ring(box: BBox, alt: float = 0.0) -> Footprint:
    return Footprint(
        (
            GeoPoint(box.min_lon, box.min_lat, alt),
            GeoPoint(box.max_lon, box.min_lat, alt),
            GeoPoint(box.max_lon, box.max_lat, alt),
            GeoPoint(box.min_lon, box.max_lat, alt),
        )
    )


_EDUCATION_ADULT = (
    ("none", 5.0),
    ("primary", 10.0),
    ("secondary", 35.0),
    ("bachelor", 35.0),
    ("master", 12.0),
    ("doctorate", 3.0),
)
_NATIONALITIES = (
    ("cn", 90.0),
    ("hk", 3.0),
    ("tw", 2.0),
    ("us", 1.5),
    ("jp", 1.5),
    ("kr", 1.0),
    ("other", 1.0),
)
_INDUSTRIES = ("electronics", "logistics", "finance", "biotech", "construction", "retail")
_EVENT_CATEGORIES = ("roadwork", "festival", "accident", "inspection")


def person_attrs(rng: SplitMix64) -> dict:
    bucket = rng.weighted_choice((("child", 20.0), ("adult", 62.0), ("senior", 18.0)))
    if bucket == "child":
        age = rng.randint(0, 17)
    elif bucket == "adult":
        age = rng.randint(18, 59)
    else:
        age = rng.randint(60, 95)

    if age < 6:
        education = "none"
    elif age < 12:
        education = "primary"
    elif age < 18:
        education = "secondary"
    else:
        education = rng.weighted_choice(_EDUCATION_ADULT)

    nationality = rng.weighted_choice(_NATIONALITIES)

    if age < 22:
        marriage = "single"
    elif age >= 70:
        marriage = rng.weighted_choice((("married", 50.0), ("widowed", 25.0), ("single", 15.0), ("divorced", 10.0)))
    else:
        marriage = rng.weighted_choice((("married", 55.0), ("single", 30.0), ("divorced", 10.0), ("widowed", 5.0)))

    if age < 18:
        employment = "student"
    elif age < 23:
        employment = rng.weighted_choice((("student", 60.0), ("employed", 35.0), ("unemployed", 5.0)))
    elif age < 60:
        employment = rng.weighted_choice(
            (("employed", 78.0), ("self_employed", 9.0), ("unemployed", 10.0), ("student", 3.0))
        )
    else:
        employment = rng.weighted_choice((("retired", 90.0), ("employed", 10.0)))

    return {
        "age": age,
        "education": education,
        "nationality": nationality,
        "marriage": marriage,
        "employment": employment,
    }


class _Emitter:
    def __init__(self):
        self.events: list[EventRecord] = []

    def emit(self, ts: int, entity: EntityId, etype: EventType, payload, source: str = "gen") -> None:
        self.events.append(
            EventRecord(
                event_id=len(self.events) + 1,
                timestamp=ts,
                entity_id=entity,
                event_type=etype,
                payload=payload,
                source=source,
            )
        )

    def create(self, ts, entity, attrs):
        self.emit(ts, entity, EventType.CREATE, attrs)

    def relate(self, ts, subject, predicate, obj):
        self.emit(ts, subject, EventType.RELATE, RelationRef(subject, predicate, obj))

    def unrelate(self, ts, subject, predicate, obj):
        self.emit(ts, subject, EventType.UNRELATE, RelationRef(subject, predicate, obj))


def generate_city(spec: GenSpec) -> GeneratedCity:
    rng = SplitMix64(spec.seed)
    counts = spec.counts
    box = spec.bbox
    out = _Emitter()
    geometry: dict[EntityId, SceneGeometry] = {}
    regions = AdminRegions()

    eid = lambda kind, local: EntityId(kind, local)

    # ---- phase 1: the 4-level admin partition --------------------------------
    t = T_BASE
    level_counts = [counts[k] for k in _HIERARCHY_KEYS]
    counters = {"s": 0, "c": 0, "g": 0}
    grid_ids: list[EntityId] = []

    def _subdivide(parent_id, parent_box, depth):
        level = ADMIN_LEVELS[depth]
        prefix = {"street": "s", "community": "c", "grid_cell": "g"}[level]
        for cell in _split_box(parent_box, level_counts[depth]):
            counters[prefix] += 1
            rid = eid(EntityKind.ADMIN_REGION, f"{prefix}{counters[prefix]}")
            out.create(t, rid, {"name": f"{level.replace('_', ' ').title()} {counters[prefix]}", "level": level})
            out.relate(t, rid, Predicate.LOCATED_IN, parent_id)
            ring = _rect_ring(cell)
            regions.add_region(rid, level, ring, parent_id)
            geometry[rid] = SceneGeometry(ring, "admin")
            if level == "grid_cell":
                grid_ids.append(rid)
            else:
                _subdivide(rid, cell, depth + 1)

    for d, cell in enumerate(_split_box(box, level_counts[0]), start=1):
        did = eid(EntityKind.ADMIN_REGION, f"d{d}")
        out.create(t, did, {"name": f"District {d}", "level": "district"})
        ring = _rect_ring(cell)
        regions.add_region(did, "district", ring, None)
        geometry[did] = SceneGeometry(ring, "admin")
        _subdivide(did, cell, 1)

    # ---- phase 2: buildings on a jittered lattice ----------------------------
    t += HOUR_MS
    n_buildings = counts["buildings"]
    building_ids: list[EntityId] = []
    building_floors: dict[EntityId, int] = {}
    if n_buildings:
        rows, cols = _near_square(n_buildings)
        margin_lon = (box.max_lon - box.min_lon) * 0.02
        margin_lat = (box.max_lat - box.min_lat) * 0.02
        inner = BBox(
            box.min_lon + margin_lon, box.min_lat + margin_lat, box.max_lon - margin_lon, box.max_lat - margin_lat
        )
        cell_w = (inner.max_lon - inner.min_lon) / cols
        cell_h = (inner.max_lat - inner.min_lat) / rows
        for i in range(n_buildings):
            r, c = divmod(i, cols)
            cx = inner.min_lon + (c + 0.5 + rng.uniform(-0.3, 0.3)) * cell_w
            cy = inner.min_lat + (r + 0.5 + rng.uniform(-0.3, 0.3)) * cell_h
            m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(cy))
            half_w = rng.uniform(20.0, 80.0) / 2.0 / m_per_deg_lon
            half_h = rng.uniform(15.0, 60.0) / 2.0 / M_PER_DEG_LAT
            height = rng.uniform(10.0, 150.0)
            bid = eid(EntityKind.BUILDING, f"b{i + 1}")
            building_ids.append(bid)
            building_floors[bid] = max(1, int(height / 3.0))
            ring = _rect_ring(BBox(cx - half_w, cy - half_h, cx + half_w, cy + half_h))
            out.create(
                t, bid, {"name": f"Building {i + 1}", "height_m": height, "floors": building_floors[bid]}
            )
            out.relate(t, bid, Predicate.LOCATED_IN, regions.assign(GeoPoint(cx, cy)).grid_cell)
            geometry[bid] = SceneGeometry(ring, "above-ground/buildings", height_m=height)

    # ---- phase 3: houses as strips of their building -------------------------
    t += HOUR_MS
    per_building = counts["households_per_building"]
    house_ids: list[EntityId] = []
    house_number = 0
    for bid in building_ids:
        bbox_b = geometry[bid].geometry.bbox
        for unit in range(per_building):
            house_number += 1
            hid = eid(EntityKind.HOUSE, f"h{house_number}")
            house_ids.append(hid)
            strip = BBox(
                _edge(bbox_b.min_lon, bbox_b.max_lon, unit, per_building),
                bbox_b.min_lat,
                _edge(bbox_b.min_lon, bbox_b.max_lon, unit + 1, per_building),
                bbox_b.max_lat,
            )
            floor = rng.randint(1, building_floors[bid])
            out.create(t, hid, {"addr": f"{bid.local_id.upper()}-{floor:02d}{unit + 1:02d}", "floor": floor})
            out.relate(t, hid, Predicate.PART_OF, bid)
            geometry[hid] = SceneGeometry(_rect_ring(strip), "above-ground/buildings")

    # ---- phase 4: persons with census attributes -----------------------------
    t += HOUR_MS
    mean = counts["persons_per_household"]
    total_persons = round(len(house_ids) * mean)
    base = int(mean)
    # Quota sampling: every house gets the floor, a seeded lottery hands out
    # the remainder, so the city-wide head count is exact, not expected.
    sizes = {hid: base for hid in house_ids}
    lottery = list(house_ids)
    rng.shuffle(lottery)
    for hid in lottery[: total_persons - base * len(house_ids)]:
        sizes[hid] += 1
    person_ids: list[EntityId] = []
    residents: dict[EntityId, list[EntityId]] = {}
    owners: dict[EntityId, EntityId] = {}
    person_number = 0
    for hid in house_ids:
        residents[hid] = []
        for _ in range(max(0, sizes[hid])):
            person_number += 1
            pid = eid(EntityKind.PERSON, f"p{person_number}")
            person_ids.append(pid)
            residents[hid].append(pid)
            out.create(t, pid, person_attrs(rng))
            out.relate(t, pid, Predicate.LIVES_IN, hid)
        if residents[hid]:
            owner = residents[hid][0]
            owners[hid] = owner
            out.relate(t, owner, Predicate.OWNS, hid)

    # ---- phase 5: companies ---------------------------------------------------
    t += HOUR_MS
    for i in range(counts["companies"]):
        cid = eid(EntityKind.COMPANY, f"co{i + 1}")
        out.create(t, cid, {"name": f"Company {i + 1}", "industry": rng.choice(_INDUSTRIES)})
        if building_ids:
            home = rng.choice(building_ids)
            out.relate(t, cid, Predicate.OPERATES, home)
            out.relate(t, cid, Predicate.LOCATED_IN, home)

    # ---- phase 6: roads, pipelines, subway, power -----------------------------
    t += HOUR_MS

    def _wander(n_vertices: int, alt: float, max_step: float = 0.03) -> Polyline:
        pts = [
            GeoPoint(rng.uniform(box.min_lon + 0.01, box.max_lon - 0.01),
                     rng.uniform(box.min_lat + 0.01, box.max_lat - 0.01), alt)
        ]
        while len(pts) < n_vertices:
            prev = pts[-1]
            lon = min(box.max_lon, max(box.min_lon, prev.lon + rng.uniform(-max_step, max_step)))
            lat = min(box.max_lat, max(box.min_lat, prev.lat + rng.uniform(-max_step, max_step)))
            if lon == prev.lon and lat == prev.lat:
                continue
            pts.append(GeoPoint(lon, lat, alt))
        return Polyline(tuple(pts))

    for i in range(counts["road_segments"]):
        rid = eid(EntityKind.ROAD_SEGMENT, f"r{i + 1}")
        out.create(t, rid, {"name": f"Road {i + 1}", "lanes": rng.randint(2, 8)})
        geometry[rid] = SceneGeometry(_wander(rng.randint(3, 5), 0.0), "above-ground/roads")

    for i in range(counts["pipeline_segments"]):
        pid = eid(EntityKind.PIPELINE_SEGMENT, f"pl{i + 1}")
        out.create(
            t, pid,
            {"material": rng.choice(("steel", "pvc", "concrete")), "diameter_mm": rng.randint(200, 1600)},
        )
        geometry[pid] = SceneGeometry(_wander(rng.randint(3, 4), -5.0), "underground/pipelines")

    for i in range(counts["subway_lines"]):
        sid = eid(EntityKind.SUBWAY_LINE, f"sub{i + 1}")
        line = _wander(6, -15.0, max_step=0.08)
        out.create(
            t, sid,
            {"name": f"Line {i + 1}", "speed_kmh": 30.0 + rng.randint(0, 20), "departure_ts": t},
        )
        geometry[sid] = SceneGeometry(line, "underground/subway")

    node_ids: list[EntityId] = []
    node_points: dict[EntityId, GeoPoint] = {}
    for i in range(counts["power_nodes"]):
        nid = eid(EntityKind.POWER_NODE, f"pn{i + 1}")
        node_ids.append(nid)
        p = GeoPoint(rng.uniform(box.min_lon + 0.01, box.max_lon - 0.01),
                     rng.uniform(box.min_lat + 0.01, box.max_lat - 0.01))
        node_points[nid] = p
        out.create(t, nid, {"name": f"Substation {i + 1}", "voltage_kv": rng.choice((110, 220, 500))})
        geometry[nid] = SceneGeometry(PointGeom(p), "networks/power")

    shuffled_nodes = list(node_ids)
    rng.shuffle(shuffled_nodes)
    component_count = 1 if len(node_ids) < 6 else 2
    edge_number = 0

    def _power_edge(a: EntityId, b: EntityId):
        nonlocal edge_number
        edge_number += 1
        peid = eid(EntityKind.POWER_EDGE, f"pe{edge_number}")
        out.create(t, peid, {"capacity_mw": rng.randint(50, 400)})
        out.relate(t, peid, Predicate.CONNECTED_TO, a)
        out.relate(t, peid, Predicate.CONNECTED_TO, b)
        geometry[peid] = SceneGeometry(Polyline((node_points[a], node_points[b])), "networks/power")

    if shuffled_nodes:
        chunk = max(1, len(shuffled_nodes) // component_count)
        groups = [shuffled_nodes[i : i + chunk] for i in range(0, len(shuffled_nodes), chunk)]
        if len(groups) > component_count:  # fold the remainder into the last group
            groups[component_count - 1].extend(g for grp in groups[component_count:] for g in grp)
            groups = groups[:component_count]
        for group in groups:
            for a, b in zip(group, group[1:]):
                _power_edge(a, b)
            if len(group) >= 4:
                _power_edge(group[0], group[len(group) // 2])

    # ---- phase 7: urban events (some close later) -----------------------------
    t += HOUR_MS
    event_ids: list[EntityId] = []
    for i in range(counts["urban_events"]):
        ueid = eid(EntityKind.URBAN_EVENT, f"ue{i + 1}")
        event_ids.append(ueid)
        out.create(
            t + i,
            ueid,
            {"title": f"Urban event {i + 1}", "category": rng.choice(_EVENT_CATEGORIES), "severity": rng.randint(1, 5)},
        )
        if grid_ids:
            out.relate(t + i, ueid, Predicate.LOCATED_IN, rng.choice(grid_ids))
    t_close = t + 3 * DAY_MS
    for i, ueid in enumerate(event_ids):
        if i % 2 == 1:
            out.emit(t_close, ueid, EventType.DELETE, {})

    # ---- phase 8: a month later, some churn for replay tests ------------------
    t_churn = T_BASE + 30 * DAY_MS
    for i, pid in enumerate(person_ids):
        if i % 50 == 17:
            out.emit(t_churn, pid, EventType.UPDATE, {"employment": rng.choice(("employed", "unemployed"))})
    for i, hid in enumerate(house_ids):
        if i % 100 == 31 and hid in owners and residents[hid]:
            new_owner = rng.choice(residents[hid])
            out.unrelate(t_churn, owners[hid], Predicate.OWNS, hid)
            out.relate(t_churn, new_owner, Predicate.OWNS, hid)
            owners[hid] = new_owner

    return GeneratedCity(spec=spec, events=out.events, geometry=geometry, regions=regions)


# ------------------------------------------------------------------ sidecar io


def geometry_to_doc(geometry: dict[EntityId, SceneGeometry], box: BBox) -> dict:
    entities = {}
    for entity, sg in sorted(geometry.items(), key=lambda kv: kv[0].canonical):
        g = sg.geometry
        if isinstance(g, Footprint):
            gtype, pts = "footprint", g.ring
        elif isinstance(g, Polyline):
            gtype, pts = "polyline", g.points
        else:
            gtype, pts = "point", (g.point,)
        entities[entity.canonical] = {
            "type": gtype,
            "coords": [[p.lon, p.lat] for p in pts],
            "alt": pts[0].alt,
            "height_m": sg.height_m,
            "layer": sg.layer_id,
        }
    return {
        "bbox": [box.min_lon, box.min_lat, box.max_lon, box.max_lat],
        "entities": entities,
    }


def geometry_from_doc(doc: dict) -> tuple[dict[EntityId, SceneGeometry], BBox]:
    box = BBox(*doc["bbox"])
    geometry: dict[EntityId, SceneGeometry] = {}
    for canonical, record in doc["entities"].items():
        entity = EntityId.parse(canonical)
        alt = float(record.get("alt", 0.0))
        pts = tuple(GeoPoint(lon, lat, alt) for lon, lat in record["coords"])
        gtype = record["type"]
        if gtype == "footprint":
            geom: Geometry = Footprint(pts)
        elif gtype == "polyline":
            geom = Polyline(pts)
        elif gtype == "point":
            geom = PointGeom(pts[0])
        else:
            raise InvalidSpec(f"unknown geometry type {gtype!r} for {canonical}")
        geometry[entity] = SceneGeometry(geom, record["layer"], height_m=float(record.get("height_m", 0.0)))
    return geometry, box


def write_artifacts(
    events, geometry: dict[EntityId, SceneGeometry], box: BBox, out_dir: str | Path
) -> tuple[Path, Path]:
    """Write events.jsonl + geometry.json with canonical encoding throughout."""
    import json

    from citylens.sdm.logfmt import encode_event

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "events.jsonl"
    geom_path = out / "geometry.json"
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(encode_event(event))
            fh.write("\n")
    doc = geometry_to_doc(geometry, box)
    with open(geom_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
        fh.write("\n")
    return log_path, geom_path


def write_city(city: GeneratedCity, out_dir: str | Path) -> tuple[Path, Path]:
    """Write a generated city's artifacts; byte-identical per spec+seed."""
    return write_artifacts(city.events, city.geometry, city.spec.bbox, out_dir)


def lod_for(entity: EntityId, sg: SceneGeometry) -> int:
    """LOD entry zoom for a sidecar record (area only matters for footprints)."""
    area = sg.geometry.area_m2 if isinstance(sg.geometry, Footprint) else 0.0
    return lod_min_zoom(area, entity.kind)
