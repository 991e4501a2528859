"""Geometry types, a uniform-grid spatial index, and admin-cell assignment.

Coordinates are lon/lat degrees on a spherical earth (R = 6,371,000 m); the
altitude field on points is meters, negative meaning underground. Geometry
predicates delegate to the kernel backend (`citylens._kernels`), which is
either the compiled extension or its pure-Python mirror.

Index structure: a uniform cell hash. The contract is oracle equivalence
with a linear scan — candidates come from the cells a query covers, then
every candidate is re-tested with the exact geometry predicate.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from citylens import _kernels as K
from citylens.errors import InvalidGeometry, Unassigned
from citylens.sdm.types import ADMIN_LEVELS, AdminPath, EntityId

M_PER_DEG_LAT = math.pi / 180.0 * K.EARTH_RADIUS_M

#: Planar tolerance (degrees) for "point lies on a line/point geometry".
ON_GEOMETRY_TOL_DEG = 1e-9


@dataclass(frozen=True, order=True)
class GeoPoint:
    lon: float
    lat: float
    alt: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat) and math.isfinite(self.alt)):
            raise InvalidGeometry("coordinates must be finite")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidGeometry(f"lon {self.lon} outside [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidGeometry(f"lat {self.lat} outside [-90, 90]")


@dataclass(frozen=True)
class BBox:
    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self):
        vals = (self.min_lon, self.min_lat, self.max_lon, self.max_lat)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidGeometry("bbox coordinates must be finite")
        if self.min_lon > self.max_lon or self.min_lat > self.max_lat:
            raise InvalidGeometry(f"bbox min exceeds max: {vals}")

    def contains_point(self, p: GeoPoint) -> bool:
        return self.min_lon <= p.lon <= self.max_lon and self.min_lat <= p.lat <= self.max_lat

    def intersects(self, other: "BBox") -> bool:
        return not (
            other.max_lon < self.min_lon
            or other.min_lon > self.max_lon
            or other.max_lat < self.min_lat
            or other.min_lat > self.max_lat
        )

    @property
    def center(self) -> GeoPoint:
        return GeoPoint((self.min_lon + self.max_lon) / 2.0, (self.min_lat + self.max_lat) / 2.0)


def _flatten(points) -> np.ndarray:
    flat = np.empty(2 * len(points), dtype=np.float64)
    for i, p in enumerate(points):
        flat[2 * i] = p.lon
        flat[2 * i + 1] = p.lat
    return flat


def _tight_bbox(points) -> BBox:
    lons = [p.lon for p in points]
    lats = [p.lat for p in points]
    return BBox(min(lons), min(lats), max(lons), max(lats))


@dataclass(frozen=True)
class Footprint:
    """Simple polygon ring, implicitly closed, vertices in ring order."""

    ring: tuple[GeoPoint, ...]
    _flat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.ring) < 3:
            raise InvalidGeometry(f"ring needs at least 3 vertices, got {len(self.ring)}")
        if len({(p.lon, p.lat) for p in self.ring}) != len(self.ring):
            raise InvalidGeometry("ring repeats a vertex")
        flat = _flatten(self.ring)
        object.__setattr__(self, "_flat", flat)
        if K.ring_self_intersects(flat) or K.ring_area(flat) <= 0.0:
            raise InvalidGeometry("ring self-intersects or has zero area")

    @property
    def bbox(self) -> BBox:
        return _tight_bbox(self.ring)

    @property
    def base_alt(self) -> float:
        return self.ring[0].alt

    @property
    def centroid(self) -> GeoPoint:
        cx, cy = K.ring_centroid(self._flat)
        return GeoPoint(cx, cy, self.base_alt)

    @property
    def area_m2(self) -> float:
        """Shoelace area scaled to meters at the ring's mean latitude."""
        lat0 = math.fsum(p.lat for p in self.ring) / len(self.ring)
        return K.ring_area(self._flat) * M_PER_DEG_LAT * M_PER_DEG_LAT * math.cos(math.radians(lat0))

    def contains(self, p: GeoPoint) -> bool:
        return bool(K.point_in_ring(p.lon, p.lat, self._flat))


@dataclass(frozen=True)
class Polyline:
    points: tuple[GeoPoint, ...]
    _flat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.points) < 2:
            raise InvalidGeometry(f"polyline needs at least 2 vertices, got {len(self.points)}")
        for a, b in zip(self.points, self.points[1:]):
            if a.lon == b.lon and a.lat == b.lat:
                raise InvalidGeometry("polyline has a zero-length segment")
        object.__setattr__(self, "_flat", _flatten(self.points))

    @property
    def bbox(self) -> BBox:
        return _tight_bbox(self.points)

    @property
    def base_alt(self) -> float:
        return self.points[0].alt

    @property
    def length_m(self) -> float:
        return float(K.polyline_length_m(self._flat))

    def point_at_m(self, dist_m: float) -> GeoPoint:
        """Point at arc distance from the start, clamped to the endpoints."""
        if dist_m <= 0.0:
            return self.points[0]
        remaining = dist_m
        for a, b in zip(self.points, self.points[1:]):
            leg = K.haversine_m(a.lon, a.lat, b.lon, b.lat)
            if remaining <= leg:
                f = remaining / leg
                return GeoPoint(a.lon + f * (b.lon - a.lon), a.lat + f * (b.lat - a.lat), a.alt)
            remaining -= leg
        return self.points[-1]

    @property
    def midpoint(self) -> GeoPoint:
        return self.point_at_m(self.length_m / 2.0)


@dataclass(frozen=True)
class PointGeom:
    point: GeoPoint

    @property
    def bbox(self) -> BBox:
        return BBox(self.point.lon, self.point.lat, self.point.lon, self.point.lat)

    @property
    def base_alt(self) -> float:
        return self.point.alt


Geometry = Union[Footprint, Polyline, PointGeom]


def geometry_bbox(g: Geometry) -> BBox:
    return g.bbox


def representative_point(g: Geometry) -> GeoPoint:
    """One stable point per geometry: area centroid, arc midpoint, or itself."""
    if isinstance(g, Footprint):
        return g.centroid
    if isinstance(g, Polyline):
        return g.midpoint
    return g.point


def geometry_area_m2(g: Geometry) -> float:
    return g.area_m2 if isinstance(g, Footprint) else 0.0


def geometry_band(g: Geometry) -> str:
    return "below" if g.base_alt < 0.0 else "above"


def geometry_intersects_rect(g: Geometry, box: BBox) -> bool:
    if isinstance(g, Footprint):
        return bool(K.ring_intersects_rect(g._flat, box.min_lon, box.min_lat, box.max_lon, box.max_lat))
    if isinstance(g, Polyline):
        return bool(K.polyline_intersects_rect(g._flat, box.min_lon, box.min_lat, box.max_lon, box.max_lat))
    return box.contains_point(g.point)


def geometry_contains_point(g: Geometry, p: GeoPoint, tol_deg: float = ON_GEOMETRY_TOL_DEG) -> bool:
    """Containment used by picking: footprints by even-odd rule (boundary
    inside), polylines and points within a planar degree tolerance."""
    if isinstance(g, Footprint):
        return g.contains(p)
    if isinstance(g, Polyline):
        return bool(K.point_on_polyline(p.lon, p.lat, g._flat, tol_deg))
    return math.hypot(p.lon - g.point.lon, p.lat - g.point.lat) <= tol_deg


def distance_m(a: GeoPoint, b: GeoPoint) -> float:
    return float(K.haversine_m(a.lon, a.lat, b.lon, b.lat))


def grid_shape(box: BBox, cell: float) -> tuple[int, int]:
    """(rows, cols) of the cell grid covering the box.

    A hair of slack keeps widths that are exact multiples of the cell from
    gaining a phantom row/column out of float noise.
    """
    if cell <= 0:
        raise ValueError("cell size must be positive")
    cols = max(1, math.ceil((box.max_lon - box.min_lon) / cell - 1e-9))
    rows = max(1, math.ceil((box.max_lat - box.min_lat) / cell - 1e-9))
    return rows, cols


def cell_bbox(box: BBox, cell: float, row: int, col: int) -> BBox:
    """Bounds of one grid cell; the outer edge is the box's own edge."""
    return BBox(
        box.min_lon + col * cell,
        box.min_lat + row * cell,
        box.min_lon + (col + 1) * cell,
        box.min_lat + (row + 1) * cell,
    )


@dataclass(frozen=True)
class IndexEntry:
    entity_id: EntityId
    geometry: Geometry
    band: str = ""

    def __post_init__(self):
        if not self.band:
            object.__setattr__(self, "band", geometry_band(self.geometry))
        if self.band not in ("above", "below"):
            raise InvalidGeometry(f"band must be 'above' or 'below', got {self.band!r}")

    @property
    def bbox(self) -> BBox:
        return self.geometry.bbox


class SpatialIndex:
    """Uniform-grid spatial hash with exact-geometry re-tests.

    The default cell is 0.01 degrees (~1.1 km east-west at Shenzhen's
    latitude), a reasonable bucket for city-block-sized geometry.
    """

    def __init__(self, cell_deg: float = 0.01):
        if cell_deg <= 0:
            raise ValueError("cell_deg must be positive")
        self._cell = cell_deg
        self._lock = threading.RLock()
        self._entries: dict[EntityId, IndexEntry] = {}
        self._cells: dict[tuple[int, int], set[EntityId]] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, entity_id: EntityId) -> bool:
        with self._lock:
            return entity_id in self._entries

    def get(self, entity_id: EntityId) -> IndexEntry | None:
        with self._lock:
            return self._entries.get(entity_id)

    def entries(self) -> list[IndexEntry]:
        with self._lock:
            return list(self._entries.values())

    def _cover(self, box: BBox):
        c = self._cell
        x0 = math.floor(box.min_lon / c)
        x1 = math.floor(box.max_lon / c)
        y0 = math.floor(box.min_lat / c)
        y1 = math.floor(box.max_lat / c)
        for ix in range(x0, x1 + 1):
            for iy in range(y0, y1 + 1):
                yield ix, iy

    def insert(self, entry: IndexEntry) -> None:
        """Add or replace; the previous entry for the same id disappears."""
        with self._lock:
            self.remove(entry.entity_id)
            self._entries[entry.entity_id] = entry
            for cell in self._cover(entry.bbox):
                self._cells.setdefault(cell, set()).add(entry.entity_id)

    def remove(self, entity_id: EntityId) -> bool:
        with self._lock:
            old = self._entries.pop(entity_id, None)
            if old is None:
                return False
            for cell in self._cover(old.bbox):
                bucket = self._cells.get(cell)
                if bucket is not None:
                    bucket.discard(entity_id)
                    if not bucket:
                        del self._cells[cell]
            return True

    def bulk_load(self, entries) -> None:
        for entry in entries:
            self.insert(entry)

    def _candidates(self, box: BBox) -> set[EntityId]:
        found: set[EntityId] = set()
        for cell in self._cover(box):
            found.update(self._cells.get(cell, ()))
        return found

    def query_bbox(self, box: BBox, band: str | None = None) -> set[EntityId]:
        """Ids of entries whose geometry intersects the box (exact test)."""
        with self._lock:
            hits = set()
            for eid in self._candidates(box):
                entry = self._entries[eid]
                if band is not None and entry.band != band:
                    continue
                if not entry.bbox.intersects(box):
                    continue
                if geometry_intersects_rect(entry.geometry, box):
                    hits.add(eid)
            return hits

    def query_point(
        self, p: GeoPoint, band: str | None = None, tol_deg: float = ON_GEOMETRY_TOL_DEG
    ) -> set[EntityId]:
        """Ids of entries containing p (see geometry_contains_point)."""
        probe = BBox(p.lon - tol_deg, p.lat - tol_deg, p.lon + tol_deg, p.lat + tol_deg)
        with self._lock:
            hits = set()
            for eid in self._candidates(probe):
                entry = self._entries[eid]
                if band is not None and entry.band != band:
                    continue
                if geometry_contains_point(entry.geometry, p, tol_deg):
                    hits.add(eid)
            return hits

    def nearest_k(self, p: GeoPoint, k: int) -> list[tuple[EntityId, float]]:
        """k nearest representative points by great-circle distance,
        ascending, ties broken by canonical id; fewer if the index is small."""
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock:
            scored = [
                (distance_m(p, representative_point(e.geometry)), eid.canonical, eid)
                for eid, e in self._entries.items()
            ]
        scored.sort(key=lambda s: (s[0], s[1]))
        return [(eid, d) for d, _, eid in scored[:k]]


@dataclass(frozen=True)
class AdminRegion:
    entity_id: EntityId
    level: str
    footprint: Footprint
    parent: EntityId | None


class AdminRegions:
    """The 4-level nested admin partition and point-to-path assignment."""

    def __init__(self):
        self._by_level: dict[str, list[AdminRegion]] = {level: [] for level in ADMIN_LEVELS}
        self._by_id: dict[EntityId, AdminRegion] = {}

    def add_region(
        self, entity_id: EntityId, level: str, footprint: Footprint, parent: EntityId | None = None
    ) -> None:
        if level not in self._by_level:
            raise ValueError(f"unknown admin level {level!r}")
        region = AdminRegion(entity_id, level, footprint, parent)
        self._by_id[entity_id] = region
        bucket = self._by_level[level]
        bucket.append(region)
        bucket.sort(key=lambda r: r.entity_id.canonical)

    def __contains__(self, entity_id: EntityId) -> bool:
        return entity_id in self._by_id

    def region(self, entity_id: EntityId) -> AdminRegion | None:
        return self._by_id.get(entity_id)

    def regions_at(self, level: str) -> list[AdminRegion]:
        return list(self._by_level[level])

    def assign(self, p: GeoPoint) -> AdminPath:
        """The unique 4-level path whose regions all contain p; on shared
        boundaries the lexically smallest id wins at each level."""
        chosen: dict[str, EntityId] = {}
        parent: EntityId | None = None
        for level in ADMIN_LEVELS:
            hit = None
            for region in self._by_level[level]:
                if parent is not None and region.parent != parent:
                    continue
                if region.footprint.contains(p):
                    hit = region
                    break  # buckets are sorted by id: first hit is the tie-break winner
            if hit is None:
                raise Unassigned(f"({p.lon}, {p.lat}) not covered at level {level}")
            chosen[level] = hit.entity_id
            parent = hit.entity_id
        return AdminPath(
            district=chosen["district"],
            street=chosen["street"],
            community=chosen["community"],
            grid_cell=chosen["grid_cell"],
        )
