"""HTTP facade over a city runtime.

Every read endpoint delegates to the library call it mirrors, so wire
results and in-process results agree by construction; responses are built
from sorted collections so repeating a GET yields identical bytes. Writes
funnel through a single lock in check → persist → apply order: nothing is
acknowledged before the append is durable, and nothing mutates the store
unless the append survived.
"""

from __future__ import annotations

import threading

from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from citylens import analytics
from citylens import errors as E
from citylens import _kernels as K
from citylens.errors import CityError
from citylens.geo import BBox, Footprint, GeoPoint, Geometry, Polyline
from citylens.logfile import EventLogFile
from citylens.runtime import CityRuntime
from citylens.scene import SceneObject, TileKey, trace_connected
from citylens.sdm.logfmt import event_from_doc
from citylens.sdm.types import ADMIN_LEVELS, EntityId, EntityKind, HouseholdRecord, StateRecord
from citylens.traffic import CongestionSample, Frame, route_position

# Age bands for composition/dot charts; everything else is categorical already.
AGE_BINS = (("child", 0, 18), ("adult", 18, 60), ("senior", 60, None))

_STATUS_FOR = {
    E.OutOfOrderEvent: 409,
    E.DuplicateCreate: 409,
    E.UnknownEntity: 404,
    E.DeletedEntity: 404,
    E.UnknownLayer: 404,
    E.UnknownSegment: 404,
    E.UnknownRelation: 404,
    E.UnknownRegion: 422,
    E.InvalidRange: 422,
    E.OutOfRange: 422,
    E.TooFewValues: 422,
    E.PointOutsideBox: 422,
    E.WrongKind: 422,
    E.NegativeSpeed: 422,
    E.Unassigned: 422,
    E.StorageFailure: 503,
}


def _status_for(exc: CityError) -> int:
    for cls in type(exc).__mro__:
        if cls in _STATUS_FOR:
            return _STATUS_FOR[cls]
    return 400


# ------------------------------------------------------------- serialization


def _r7(x: float) -> float:
    return round(float(x), 7)


def _geometry_doc(geometry: Geometry) -> dict:
    if isinstance(geometry, Footprint):
        return {
            "type": "footprint",
            "coordinates": [[_r7(v.lon), _r7(v.lat)] for v in geometry.ring],
            "alt": _r7(geometry.base_alt),
        }
    if isinstance(geometry, Polyline):
        return {
            "type": "polyline",
            "coordinates": [[_r7(v.lon), _r7(v.lat)] for v in geometry.points],
            "alt": _r7(geometry.points[0].alt),
        }
    p = geometry.point
    return {"type": "point", "coordinates": [[_r7(p.lon), _r7(p.lat)]], "alt": _r7(p.alt)}


def _object_doc(obj: SceneObject) -> dict:
    return {
        "id": obj.entity_id.canonical,
        "layer": obj.layer_id,
        "lod": obj.lod_min_zoom,
        "height_m": obj.height_m,
        "band": obj.band,
        "geometry": _geometry_doc(obj.geometry),
    }


def _state_doc(state: StateRecord) -> dict:
    return {
        "entity": state.entity_id.canonical,
        "version": state.version,
        "valid_from": state.valid_from,
        "valid_to": state.valid_to,
        "attributes": dict(sorted(state.attributes.items())),
    }


def _household_doc(rec: HouseholdRecord) -> dict:
    path = None
    if rec.admin_path is not None:
        path = {level: rid.canonical for level, rid in zip(ADMIN_LEVELS, rec.admin_path.levels())}
    return {
        "at": rec.at,
        "house": _state_doc(rec.house),
        "building": None if rec.building is None else _state_doc(rec.building),
        "owner": None if rec.owner is None else _state_doc(rec.owner),
        "residents": [_state_doc(s) for s in rec.residents],
        "admin_path": path,
        "open_events": [_state_doc(s) for s in rec.open_events],
    }


def _frame_doc(frame: Frame) -> dict:
    levels = sorted(frame.levels.items(), key=lambda kv: kv[0].canonical)
    return {"t": frame.t, "levels": {seg.canonical: lvl.value for seg, lvl in levels}}


def _category_map_for(attr: str) -> analytics.CategoryMap:
    if attr == "age":
        return analytics.CategoryMap.ranges(AGE_BINS)
    return analytics.CategoryMap.identity()


def _parse_bbox_param(text: str) -> BBox:
    try:
        min_lon, min_lat, max_lon, max_lat = (float(v) for v in text.split(","))
    except ValueError:
        raise HTTPException(status_code=400, detail=f"bad bbox {text!r}") from None
    return BBox(min_lon, min_lat, max_lon, max_lat)


def _entity_param(text: str, default_kind: EntityKind) -> EntityId:
    """Path segments accept either a canonical id or a bare local id."""
    if ":" in text:
        return EntityId.parse(text)
    return EntityId(default_kind, text)


# ---------------------------------------------------------------------- app


def create_app(
    runtime: CityRuntime, log: EventLogFile | None = None, ui_dir: str | None = None
) -> FastAPI:
    """Wire a runtime (and optionally a live log file) into a FastAPI app.

    ``ui_dir`` mounts a static browser client under ``/ui`` so the bundled
    frontend can be served same-origin with the API it consumes.
    """
    app = FastAPI(title="citylens")
    store = runtime.store
    write_lock = threading.Lock()

    @app.exception_handler(CityError)
    async def _city_error(request: Request, exc: CityError) -> JSONResponse:
        doc = {"error": type(exc).__name__, "detail": str(exc)}
        return JSONResponse(status_code=_status_for(exc), content=doc)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": "ValueError", "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _bad_params(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": "ValidationError", "detail": str(exc)})

    def _at(at: int | None) -> int:
        return store.head_time if at is None else at

    @app.get("/healthz")
    def healthz() -> dict:
        box = runtime.bbox
        return {
            "status": "ok",
            "events": len(store),
            "base_time": store.base_time,
            "head_time": store.head_time,
            "kernels": K.BACKEND,
            "bbox": None if box is None else [box.min_lon, box.min_lat, box.max_lon, box.max_lat],
        }

    @app.get("/layers")
    def layers() -> dict:
        return runtime.catalog.tree.as_dict()

    @app.get("/tiles/{z}/{x}/{y}")
    def tile(z: int, x: int, y: int, at: int | None = None) -> dict:
        t = _at(at)
        try:
            key = TileKey(z, x, y)
        except (CityError, ValueError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        manifest = runtime.catalog.objects_for_tile(key, include=runtime.alive(t), generated_at=t)
        return {
            "tile": {"z": key.z, "x": key.x, "y": key.y},
            "generated_at": manifest.generated_at,
            "objects": [_object_doc(o) for o in manifest.objects],
        }

    @app.get("/entities/{entity_id}")
    def entity(entity_id: str, at: int | None = None) -> dict:
        t = _at(at)
        state = store.state_at(EntityId.parse(entity_id), t)
        if state is None:
            raise HTTPException(status_code=404, detail=f"{entity_id} has no state at {t}")
        return _state_doc(state)

    @app.get("/entities/{entity_id}/holographic")
    def holographic(entity_id: str, at: int | None = None) -> dict:
        t = _at(at)
        return _household_doc(store.household_record(EntityId.parse(entity_id), t))

    @app.get("/pick")
    def pick(lon: float, lat: float, z: int, mode: str = "above", at: int | None = None) -> dict:
        t = _at(at)
        if mode not in ("above", "below"):
            raise HTTPException(status_code=400, detail=f"mode must be above or below, not {mode!r}")
        obj = runtime.catalog.pick_object(GeoPoint(lon, lat), z, mode=mode, include=runtime.alive(t))
        return {"object": None if obj is None else _object_doc(obj)}

    @app.post("/events")
    def post_event(doc: dict) -> dict:
        event = event_from_doc(doc)
        with write_lock:
            store.check_event(event)
            if log is not None:
                log.append(event)
            state = store.apply_event(event)
        return {"applied": event.event_id, "state": _state_doc(state)}

    @app.post("/traffic/samples")
    def post_samples(body: Any = Body()) -> dict:
        docs = body.get("samples") if isinstance(body, dict) else body
        if not isinstance(docs, list):
            raise HTTPException(status_code=400, detail="body must be a sample list or {samples: [...]}")
        samples = []
        for i, doc in enumerate(docs):
            if not isinstance(doc, dict) or not {"segment", "t", "speed_kmh"} <= doc.keys():
                raise HTTPException(status_code=400, detail=f"sample {i}: need segment, t, speed_kmh")
            samples.append(
                CongestionSample(
                    segment_id=_entity_param(str(doc["segment"]), EntityKind.ROAD_SEGMENT),
                    t=int(doc["t"]),
                    speed_kmh=float(doc["speed_kmh"]),
                )
            )
        for sample in samples:
            runtime.traffic.ingest(sample)
        return {"ingested": len(samples)}

    def _select(region: str, kind: str, t: int) -> set[EntityId]:
        selector = analytics.parse_region_selector(region)
        entity_kind = EntityKind.parse(kind)
        return analytics.select_entities(store, runtime.index, runtime.regions, selector, entity_kind, t)

    @app.get("/stats/composition")
    def stats_composition(region: str, kind: str, attr: str, at: int | None = None) -> dict:
        t = _at(at)
        picked = _select(region, kind, t)
        comp = analytics.composition(store, picked, attr, _category_map_for(attr), t)
        return {
            "attribute": comp.attribute,
            "total": comp.total,
            "categories": [
                {"label": label, "count": count, "fraction": fraction}
                for label, count, fraction in comp.categories
            ],
        }

    @app.get("/stats/histogram")
    def stats_histogram(
        region: str,
        kind: str,
        attr: str,
        lo: float = Query(alias="min"),
        hi: float = Query(alias="max"),
        bins: int = Query(),
        at: int | None = None,
    ) -> dict:
        t = _at(at)
        values = []
        for picked in sorted(_select(region, kind, t), key=lambda e: e.canonical):
            state = store.state_at(picked, t)
            value = state.attributes.get(attr)
            if not isinstance(value, bool) and isinstance(value, (int, float)):
                values.append(float(value))
        spec = analytics.HistogramSpec(lo, hi, bins)
        counts = analytics.histogram(values, spec)
        try:
            fit = analytics.fit_normal(values)
            fit_doc = {"mean": fit.mean, "stddev": fit.stddev, "degenerate": fit.degenerate}
        except E.TooFewValues:
            fit_doc = None
        width = (spec.max - spec.min) / spec.bin_count
        return {
            "counts": counts,
            "edges": [spec.min + i * width for i in range(spec.bin_count + 1)],
            "total": len(values),
            "fit": fit_doc,
        }

    @app.get("/heatmap")
    def heatmap(
        bbox: str, cell: float, sigma: float = 0.0, kind: str = "person", at: int | None = None
    ) -> dict:
        t = _at(at)
        box = _parse_bbox_param(bbox)
        points = []
        for entity in store.entity_ids(EntityKind.parse(kind)):
            if store.state_at(entity, t) is None:
                continue
            p = analytics.locate_entity(store, runtime.index, entity, t)
            if p is not None and box.contains_point(p):
                points.append(p)
        grid = analytics.heat_grid(points, box, cell, sigma)
        return {
            "rows": grid.rows,
            "cols": grid.cols,
            "cell": grid.cell_size,
            "origin": {"lon": _r7(grid.origin.lon), "lat": _r7(grid.origin.lat)},
            "values": [float(v) for v in grid.values.reshape(-1)],
        }

    @app.get("/dots")
    def dots(region: str, kind: str, attr: str, at: int | None = None) -> dict:
        t = _at(at)
        picked = _select(region, kind, t)
        dotted = analytics.dotted_map(store, runtime.index, picked, attr, t, _category_map_for(attr))
        return {
            "dots": [
                {"id": entity.canonical, "lon": _r7(p.lon), "lat": _r7(p.lat), "label": label}
                for entity, p, label in dotted.dots
            ],
            "skipped": dotted.skipped,
        }

    @app.get("/traffic/current")
    def traffic_current(at: int | None = None) -> dict:
        return _frame_doc(runtime.traffic.conditions_at(_at(at)))

    @app.get("/traffic/areal")
    def traffic_areal(bbox: str | None = None, cell: float = 0.01, at: int | None = None) -> dict:
        t = _at(at)
        box = runtime.bbox if bbox is None else _parse_bbox_param(bbox)
        frame = runtime.traffic.areal_conditions(t, box, cell)
        return {
            "t": frame.t,
            "bbox": [_r7(box.min_lon), _r7(box.min_lat), _r7(box.max_lon), _r7(box.max_lat)],
            "cell": frame.cell_size,
            "rows": frame.rows,
            "cols": frame.cols,
            "levels": [level.value for level in frame.levels],
        }

    @app.get("/traffic/history")
    def traffic_history(
        start: int = Query(alias="from"), to: int = Query(), step: int = Query()
    ) -> dict:
        frames = runtime.traffic.replay_frames(start, to, step)
        return {"frames": [_frame_doc(f) for f in frames]}

    @app.get("/subway/{line}/position")
    def subway_position(line: str, at: int | None = None) -> dict:
        t = _at(at)
        line_id = _entity_param(line, EntityKind.SUBWAY_LINE)
        schedule = runtime.schedules.get(line_id)
        if schedule is None:
            raise HTTPException(status_code=404, detail=f"no schedule for {line_id}")
        p, status = route_position(schedule, t)
        return {
            "line": line_id.canonical,
            "t": t,
            "status": status.value,
            "position": {"lon": _r7(p.lon), "lat": _r7(p.lat), "alt": _r7(p.alt)},
        }

    @app.get("/power/{node}/connected")
    def power_connected(node: str, at: int | None = None) -> dict:
        node_id = _entity_param(node, EntityKind.POWER_NODE)
        reached = trace_connected(store, node_id, at)
        return {"node": node_id.canonical, "connected": sorted(n.canonical for n in reached)}

    if ui_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
