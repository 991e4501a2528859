"""Assemble a servable city from an event log and its geometry sidecar.

The store is the single source of truth for state and relations; the
sidecar only carries render geometry. Everything else here — catalog,
admin partition, traffic segment registry, subway schedules — is derived.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from citylens.errors import ParseError
from citylens.gen import DEFAULT_BBOX, SceneGeometry, geometry_from_doc, lod_for
from citylens.geo import AdminRegions, BBox, Footprint, Polyline, SpatialIndex
from citylens.logfile import recover
from citylens.scene import SceneCatalog, SceneObject
from citylens.sdm.store import EventStore
from citylens.sdm.types import ADMIN_LEVELS, EntityId, EntityKind, Predicate
from citylens.traffic import RouteSchedule, TrafficStore

DEFAULT_SUBWAY_SPEED_KMH = 40.0


@dataclass
class CityRuntime:
    store: EventStore
    catalog: SceneCatalog
    regions: AdminRegions
    traffic: TrafficStore
    schedules: dict[EntityId, RouteSchedule]
    geometry: dict[EntityId, SceneGeometry]
    bbox: BBox

    @property
    def index(self) -> SpatialIndex:
        return self.catalog._index

    def alive(self, t: int):
        """Predicate factory: is a scene object's entity live at t?"""
        return lambda obj: self.store.state_at(obj.entity_id, t) is not None


def build_runtime(
    store: EventStore, geometry: dict[EntityId, SceneGeometry], bbox: BBox | None = None
) -> CityRuntime:
    catalog = SceneCatalog()
    for entity, sg in geometry.items():
        catalog.upsert_object(
            SceneObject(
                entity_id=entity,
                layer_id=sg.layer_id,
                geometry=sg.geometry,
                height_m=sg.height_m,
                lod_min_zoom=lod_for(entity, sg),
            )
        )

    head = store.head_time
    regions = AdminRegions()
    for entity in store.entity_ids(EntityKind.ADMIN_REGION):
        sg = geometry.get(entity)
        history = store.history(entity)
        if sg is None or not history or not isinstance(sg.geometry, Footprint):
            continue
        level = history[-1].attributes.get("level")
        if level not in ADMIN_LEVELS:
            continue
        parents = sorted(
            (
                rel.object
                for rel in store.relations_of(entity, Predicate.LOCATED_IN, history[0].valid_from, "out")
                if rel.object.kind is EntityKind.ADMIN_REGION
            ),
            key=lambda e: e.canonical,
        )
        regions.add_region(entity, level, sg.geometry, parents[0] if parents else None)

    traffic = TrafficStore()
    for entity in store.entity_ids(EntityKind.ROAD_SEGMENT):
        sg = geometry.get(entity)
        if sg is not None and isinstance(sg.geometry, Polyline):
            traffic.register_segment(entity, sg.geometry)

    schedules: dict[EntityId, RouteSchedule] = {}
    for entity in store.entity_ids(EntityKind.SUBWAY_LINE):
        sg = geometry.get(entity)
        if sg is None or not isinstance(sg.geometry, Polyline):
            continue
        state = store.history(entity)[-1]
        speed = state.attributes.get("speed_kmh", DEFAULT_SUBWAY_SPEED_KMH)
        if not isinstance(speed, (int, float)) or speed <= 0:
            speed = DEFAULT_SUBWAY_SPEED_KMH
        departure = state.attributes.get("departure_ts", head)
        if not isinstance(departure, int):
            departure = head
        legs = len(sg.geometry.points) - 1
        schedules[entity] = RouteSchedule(
            line_id=entity, line=sg.geometry, t0=departure, speeds_kmh=(float(speed),) * legs
        )

    box = bbox
    if box is None:
        boxes = [sg.geometry.bbox for sg in geometry.values()]
        if boxes:
            box = BBox(
                min(b.min_lon for b in boxes),
                min(b.min_lat for b in boxes),
                max(b.max_lon for b in boxes),
                max(b.max_lat for b in boxes),
            )
        else:
            box = DEFAULT_BBOX
    return CityRuntime(
        store=store,
        catalog=catalog,
        regions=regions,
        traffic=traffic,
        schedules=schedules,
        geometry=geometry,
        bbox=box,
    )


def load_runtime(log_path: str | Path, geometry_path: str | Path | None = None) -> CityRuntime:
    """Recover the store from the log and wire the derived structures.

    The sidecar defaults to geometry.json next to the log; a missing sidecar
    yields an empty catalog (the store alone is still fully queryable).
    """
    log_path = Path(log_path)
    store = recover(log_path)

    geom_path = Path(geometry_path) if geometry_path is not None else log_path.with_name("geometry.json")
    geometry: dict[EntityId, SceneGeometry] = {}
    bbox = None
    if geom_path.exists():
        try:
            doc = json.loads(geom_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"geometry sidecar {geom_path}: {exc}") from None
        geometry, bbox = geometry_from_doc(doc)
    return build_runtime(store, geometry, bbox)
