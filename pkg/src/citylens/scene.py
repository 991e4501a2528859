"""Scene catalog: layer tree, slippy tiles, LOD manifests, picking, power graph.

Tiles follow the Web-Mercator slippy scheme with integer (z, x, y); tile
edges are computed from the exact binary fractions x/2^z and y/2^z, which is
what makes the four children of a tile cover their parent bit-for-bit.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

from citylens import _kernels as K
from citylens.errors import (
    InvalidGeometry,
    LatitudeOutOfRange,
    OrphanLayer,
    UnknownEntity,
    UnknownLayer,
    WrongKind,
)
from citylens.geo import (
    BBox,
    Geometry,
    GeoPoint,
    IndexEntry,
    SpatialIndex,
    geometry_area_m2,
    geometry_intersects_rect,
)
from citylens.sdm.store import EventStore
from citylens.sdm.types import EntityId, EntityKind, Predicate

MAX_ZOOM = 22
MERCATOR_LAT_LIMIT = 85.0511


@dataclass(frozen=True, order=True)
class TileKey:
    z: int
    x: int
    y: int

    def __post_init__(self):
        if not 0 <= self.z <= MAX_ZOOM:
            raise ValueError(f"zoom {self.z} outside 0..{MAX_ZOOM}")
        n = 1 << self.z
        if not (0 <= self.x < n and 0 <= self.y < n):
            raise ValueError(f"tile ({self.x}, {self.y}) outside zoom-{self.z} grid")

    @property
    def bbox(self) -> BBox:
        n = 1 << self.z
        return BBox(
            _edge_lon(self.x, n),
            _edge_lat(self.y + 1, n),
            _edge_lon(self.x + 1, n),
            _edge_lat(self.y, n),
        )

    def children(self) -> tuple["TileKey", "TileKey", "TileKey", "TileKey"]:
        z, x, y = self.z + 1, 2 * self.x, 2 * self.y
        return (TileKey(z, x, y), TileKey(z, x + 1, y), TileKey(z, x, y + 1), TileKey(z, x + 1, y + 1))

    def parent(self) -> "TileKey | None":
        if self.z == 0:
            return None
        return TileKey(self.z - 1, self.x // 2, self.y // 2)


def _edge_lon(x: int, n: int) -> float:
    return (x / n) * 360.0 - 180.0


def _edge_lat(y: int, n: int) -> float:
    # y/n is exact (power-of-two divisor), so shared tile edges are
    # computed from identical inputs at every zoom.
    return math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * (y / n)))))


def tile_key_for(p: GeoPoint, z: int) -> TileKey:
    if abs(p.lat) > MERCATOR_LAT_LIMIT:
        raise LatitudeOutOfRange(f"lat {p.lat} beyond ±{MERCATOR_LAT_LIMIT}")
    if not 0 <= z <= MAX_ZOOM:
        raise ValueError(f"zoom {z} outside 0..{MAX_ZOOM}")
    x, y = K.tile_xy(p.lon, p.lat, z)
    return TileKey(z, x, y)


# --------------------------------------------------------------------- layers

CANONICAL_LAYERS = (
    # (layer_id, name, parent_id)
    ("city", "City", None),
    ("above-ground", "Above ground", "city"),
    ("above-ground/buildings", "Buildings", "above-ground"),
    ("above-ground/roads", "Roads", "above-ground"),
    ("underground", "Underground", "city"),
    ("underground/pipelines", "Pipelines", "underground"),
    ("underground/subway", "Subway", "underground"),
    ("networks", "Networks", "city"),
    ("networks/power", "Power grid", "networks"),
    ("admin", "Administrative regions", "city"),
    ("overlays", "Overlays", "city"),
    ("overlays/heatmap", "Heatmap", "overlays"),
    ("overlays/traffic", "Traffic", "overlays"),
)


@dataclass
class LayerNode:
    layer_id: str
    name: str
    parent_id: str | None
    visible: bool = True
    children: list["LayerNode"] = field(default_factory=list)


class LayerTree:
    """The canonical layer skeleton with per-node visibility flags."""

    def __init__(self):
        self._nodes: dict[str, LayerNode] = {}
        for layer_id, name, parent_id in CANONICAL_LAYERS:
            node = LayerNode(layer_id, name, parent_id)
            self._nodes[layer_id] = node
            if parent_id is not None:
                self._nodes[parent_id].children.append(node)
        self.root = self._nodes["city"]

    def __contains__(self, layer_id: str) -> bool:
        return layer_id in self._nodes

    def node(self, layer_id: str) -> LayerNode:
        try:
            return self._nodes[layer_id]
        except KeyError:
            raise UnknownLayer(layer_id) from None

    def is_leaf(self, layer_id: str) -> bool:
        return not self.node(layer_id).children

    def leaf_ids(self) -> list[str]:
        return [lid for lid, n in self._nodes.items() if not n.children]

    def set_visible(self, layer_id: str, visible: bool) -> None:
        self.node(layer_id).visible = visible

    def effective_visibility(self, layer_id: str) -> bool:
        node = self.node(layer_id)
        while node is not None:
            if not node.visible:
                return False
            node = self._nodes[node.parent_id] if node.parent_id is not None else None
        return True

    def as_dict(self) -> dict:
        def render(node: LayerNode) -> dict:
            return {
                "layer_id": node.layer_id,
                "name": node.name,
                "visible": node.visible,
                "children": [render(c) for c in node.children],
            }

        return render(self.root)


# -------------------------------------------------------------------- objects

_KIND_LOD = {
    EntityKind.ROOM: 18,
    EntityKind.PIPELINE_SEGMENT: 15,
    EntityKind.ROAD_SEGMENT: 12,
    EntityKind.SUBWAY_LINE: 12,
    EntityKind.POWER_NODE: 14,
    EntityKind.POWER_EDGE: 14,
}


def lod_min_zoom(footprint_area_m2: float, kind: EntityKind) -> int:
    """Minimum zoom at which an object of this kind/size enters manifests."""
    if footprint_area_m2 < 0:
        raise ValueError("area must be >= 0")
    fixed = _KIND_LOD.get(kind)
    if fixed is not None:
        return fixed
    if footprint_area_m2 >= 1e5:
        return 11
    if footprint_area_m2 >= 1e4:
        return 13
    if footprint_area_m2 >= 1e3:
        return 15
    return 16


@dataclass(frozen=True)
class SceneObject:
    entity_id: EntityId
    layer_id: str
    geometry: Geometry
    height_m: float = 0.0
    lod_min_zoom: int = 0

    def __post_init__(self):
        if self.height_m < 0:
            raise InvalidGeometry(f"height_m {self.height_m} negative")
        if not 0 <= self.lod_min_zoom <= MAX_ZOOM:
            raise InvalidGeometry(f"lod_min_zoom {self.lod_min_zoom} outside 0..{MAX_ZOOM}")
        if self.layer_id == "underground/pipelines" and self.geometry.base_alt >= 0:
            raise InvalidGeometry("pipeline geometry must sit below ground (alt < 0)")

    @property
    def band(self) -> str:
        return "below" if self.geometry.base_alt < 0 else "above"

    @property
    def area_m2(self) -> float:
        return geometry_area_m2(self.geometry)


@dataclass(frozen=True)
class TileManifest:
    key: TileKey
    objects: tuple[SceneObject, ...]
    generated_at: int


class SceneCatalog:
    """All renderable objects plus the layer tree; read-mostly."""

    def __init__(self, tree: LayerTree | None = None):
        self.tree = tree if tree is not None else LayerTree()
        self._lock = threading.RLock()
        self._objects: dict[EntityId, SceneObject] = {}
        self._index = SpatialIndex()

    def __len__(self) -> int:
        with self._lock:
            return len(self._objects)

    def upsert_object(self, obj: SceneObject) -> None:
        if obj.layer_id not in self.tree or not self.tree.is_leaf(obj.layer_id):
            raise OrphanLayer(f"{obj.entity_id} references layer {obj.layer_id!r}")
        with self._lock:
            self._objects[obj.entity_id] = obj
            self._index.insert(IndexEntry(obj.entity_id, obj.geometry, obj.band))

    def remove_object(self, entity_id: EntityId) -> bool:
        with self._lock:
            self._index.remove(entity_id)
            return self._objects.pop(entity_id, None) is not None

    def object(self, entity_id: EntityId) -> SceneObject | None:
        with self._lock:
            return self._objects.get(entity_id)

    def objects(self) -> list[SceneObject]:
        with self._lock:
            return list(self._objects.values())

    def objects_for_tile(self, key: TileKey, include=None, generated_at: int = 0) -> TileManifest:
        """Manifest of visible objects whose geometry meets the tile box.

        `include` is an extra predicate (e.g. "entity alive at t") applied on
        top of the LOD and layer-visibility filters.
        """
        box = key.bbox
        visible_layer = {lid: self.tree.effective_visibility(lid) for lid in self.tree.leaf_ids()}
        with self._lock:
            candidates = sorted(self._index.query_bbox(box), key=lambda e: e.canonical)
            picked = []
            for eid in candidates:
                obj = self._objects[eid]
                if obj.lod_min_zoom > key.z:
                    continue
                if not visible_layer.get(obj.layer_id, False):
                    continue
                if include is not None and not include(obj):
                    continue
                picked.append(obj)
        return TileManifest(key=key, objects=tuple(picked), generated_at=generated_at)

    def pick_object(self, p: GeoPoint, z: int, mode: str = "above", include=None) -> SceneObject | None:
        """Smallest-footprint visible object containing p in the given band."""
        if mode not in ("above", "below"):
            raise ValueError(f"mode must be 'above' or 'below', got {mode!r}")
        with self._lock:
            hits = self._index.query_point(p, band=mode)
            best: SceneObject | None = None
            best_key = None
            for eid in hits:
                obj = self._objects[eid]
                if obj.lod_min_zoom > z:
                    continue
                if not self.tree.effective_visibility(obj.layer_id):
                    continue
                if include is not None and not include(obj):
                    continue
                rank = (obj.area_m2, obj.entity_id.canonical)
                if best_key is None or rank < best_key:
                    best, best_key = obj, rank
            return best


def trace_connected(store: EventStore, node: EntityId, t: int | None = None) -> set[EntityId]:
    """Power nodes reachable from `node` over undirected ConnectedTo links.

    Traversal may pass through edge entities; only PowerNodes are reported.
    Defaults to the store's head time (the "now" of the log).
    """
    if node.kind is not EntityKind.POWER_NODE:
        raise WrongKind(f"{node} is not a power node")
    if not store.exists(node):
        raise UnknownEntity(str(node))
    at = store.head_time if t is None else t
    seen = {node}
    frontier = [node]
    reachable = {node}
    while frontier:
        current = frontier.pop()
        neighbors = [rel.object for rel in store.relations_of(current, Predicate.CONNECTED_TO, at, "out")]
        neighbors += [rel.subject for rel in store.relations_of(current, Predicate.CONNECTED_TO, at, "in")]
        for nb in neighbors:
            if nb in seen:
                continue
            seen.add(nb)
            if nb.kind is EntityKind.POWER_NODE:
                reachable.add(nb)
            frontier.append(nb)
    return reachable


def manifest_is_sound(manifest: TileManifest) -> bool:
    """Geometric re-check of the manifest contract (used by tests and
    assertions): every object truly intersects the tile box and clears LOD."""
    box = manifest.key.bbox
    return all(
        obj.lod_min_zoom <= manifest.key.z and geometry_intersects_rect(obj.geometry, box)
        for obj in manifest.objects
    )
