"""External dataset ingestion: FeatureCollection documents to Create events.

Accepted features become Create events plus sidecar geometry; anything
invalid is rejected with a per-feature diagnostic and the rest of the
document is unaffected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from citylens.errors import CityError, InvalidGeometry, ParseError
from citylens.gen import T_BASE, SceneGeometry
from citylens.geo import BBox, Footprint, Geometry, GeoPoint, PointGeom, Polyline
from citylens.sdm.types import EntityId, EntityKind, EventRecord, EventType, validate_payload

_DEFAULT_LAYER = {
    EntityKind.BUILDING: "above-ground/buildings",
    EntityKind.HOUSE: "above-ground/buildings",
    EntityKind.ROOM: "above-ground/buildings",
    EntityKind.URBAN_COMPONENT: "above-ground/buildings",
    EntityKind.ROAD_SEGMENT: "above-ground/roads",
    EntityKind.PIPELINE_SEGMENT: "underground/pipelines",
    EntityKind.SUBWAY_LINE: "underground/subway",
    EntityKind.POWER_NODE: "networks/power",
    EntityKind.POWER_EDGE: "networks/power",
    EntityKind.ADMIN_REGION: "admin",
}

_UNDERGROUND_DEFAULT_ALT = {
    EntityKind.PIPELINE_SEGMENT: -5.0,
    EntityKind.SUBWAY_LINE: -15.0,
}

_CAMEL_SPLIT = re.compile(r"(?<!^)(?=[A-Z])")


def normalize_kind(text: str) -> EntityKind:
    """Accepts CamelCase ("RoadSegment") and canonical ("road_segment")."""
    snake = _CAMEL_SPLIT.sub("_", text.strip()).lower()
    return EntityKind.parse(snake)


@dataclass(frozen=True)
class ImportReport:
    accepted: int
    rejected: int
    diagnostics: tuple[str, ...]


@dataclass
class ImportResult:
    events: list[EventRecord]
    geometry: dict[EntityId, SceneGeometry]
    bbox: BBox | None
    report: ImportReport


def _parse_coords(pairs, alt: float):
    points = []
    for pair in pairs:
        if not isinstance(pair, (list, tuple)) or len(pair) < 2:
            raise InvalidGeometry(f"bad coordinate {pair!r}")
        points.append(GeoPoint(float(pair[0]), float(pair[1]), alt))
    return tuple(points)


def _feature_geometry(gdoc, alt: float) -> Geometry | None:
    if gdoc is None:
        return None
    if not isinstance(gdoc, dict) or "type" not in gdoc:
        raise InvalidGeometry("geometry must be an object with a type")
    gtype = gdoc["type"]
    coords = gdoc.get("coordinates")
    if gtype == "Polygon":
        if not coords or not coords[0]:
            raise InvalidGeometry("Polygon has no ring")
        ring = _parse_coords(coords[0], alt)
        if len(ring) >= 2 and ring[0].lon == ring[-1].lon and ring[0].lat == ring[-1].lat:
            ring = ring[:-1]  # drop the conventional closing vertex
        return Footprint(ring)
    if gtype == "LineString":
        return Polyline(_parse_coords(coords or [], alt))
    if gtype == "Point":
        if not isinstance(coords, (list, tuple)) or len(coords) < 2:
            raise InvalidGeometry("Point needs [lon, lat]")
        return PointGeom(GeoPoint(float(coords[0]), float(coords[1]), alt))
    raise InvalidGeometry(f"unsupported geometry type {gtype!r}")


def import_doc(doc) -> ImportResult:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("document is not a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise ParseError("FeatureCollection has no features list")

    events: list[EventRecord] = []
    geometry: dict[EntityId, SceneGeometry] = {}
    diagnostics: list[str] = []
    seen: set[EntityId] = set()

    for n, feature in enumerate(features, start=1):
        try:
            if not isinstance(feature, dict) or feature.get("type") != "Feature":
                raise ParseError("not a Feature object")
            props = feature.get("properties") or {}
            if not isinstance(props, dict):
                raise ParseError("properties must be an object")
            kind = normalize_kind(str(props.get("kind", "")))
            local = str(props.get("id", "")).strip()
            entity = EntityId(kind, local)
            if entity in seen:
                raise ParseError(f"duplicate id {entity}")

            base_alt = float(props.get("base_alt", _UNDERGROUND_DEFAULT_ALT.get(kind, 0.0)))
            height = float(props.get("height_m", 0.0))
            geom = _feature_geometry(feature.get("geometry"), base_alt)
            layer = props.get("layer") or _DEFAULT_LAYER.get(kind)
            if geom is not None and layer is None:
                raise ParseError(f"no layer for kind {kind.value}")

            attrs = dict(props.get("attrs") or {})
            if height > 0:
                attrs.setdefault("height_m", height)
            validate_payload(attrs)

            seen.add(entity)
            events.append(
                EventRecord(
                    event_id=len(events) + 1,
                    timestamp=T_BASE,
                    entity_id=entity,
                    event_type=EventType.CREATE,
                    payload=attrs,
                    source="import",
                )
            )
            if geom is not None:
                geometry[entity] = SceneGeometry(geom, layer, height_m=max(0.0, height))
        except CityError as exc:
            diagnostics.append(f"feature {n}: {exc}")
        except (TypeError, ValueError) as exc:
            diagnostics.append(f"feature {n}: {exc}")

    box = None
    if geometry:
        bxs = [sg.geometry.bbox for sg in geometry.values()]
        box = BBox(
            min(b.min_lon for b in bxs),
            min(b.min_lat for b in bxs),
            max(b.max_lon for b in bxs),
            max(b.max_lat for b in bxs),
        )
    report = ImportReport(accepted=len(events), rejected=len(diagnostics), diagnostics=tuple(diagnostics))
    return ImportResult(events=events, geometry=geometry, bbox=box, report=report)


def import_dataset(path: str | Path) -> ImportResult:
    """Parse and convert a FeatureCollection file; ParseError if malformed."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return import_doc(doc)
