"""Region statistics: selection, composition, histograms, heat and dot maps.

Everything here is a pure function over a store snapshot (as-of time t), a
spatial index, and the admin-region partition — no hidden state, freely
parallel. Entities without their own geometry are located by following
LivesIn / PartOf / LocatedIn relations to something the index knows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from citylens import _kernels as K
from citylens.errors import (
    InvalidRange,
    OutOfRange,
    PointOutsideBox,
    TooFewValues,
    UnknownRegion,
    Unassigned,
)
from citylens.geo import AdminRegions, BBox, GeoPoint, SpatialIndex, grid_shape, representative_point
from citylens.sdm.store import EventStore
from citylens.sdm.types import ADMIN_LEVELS, EntityId, EntityKind, Predicate

_LOCATE_PREDICATES = (Predicate.LIVES_IN, Predicate.PART_OF, Predicate.LOCATED_IN)
_LOCATE_MAX_HOPS = 8

UNKNOWN_LABEL = "unknown"


# ------------------------------------------------------------------ selectors


@dataclass(frozen=True)
class AdminPrefix:
    """district [, street [, community [, grid_cell]]] — a partial path."""

    levels: tuple[EntityId, ...]

    def __post_init__(self):
        if not 1 <= len(self.levels) <= len(ADMIN_LEVELS):
            raise UnknownRegion(f"admin prefix needs 1..{len(ADMIN_LEVELS)} levels")


@dataclass(frozen=True)
class Community:
    community: EntityId


@dataclass(frozen=True)
class GridRange:
    grids: tuple[EntityId, ...]


@dataclass(frozen=True)
class Box:
    box: BBox


RegionSelector = AdminPrefix | Community | GridRange | Box


def parse_region_selector(text: str) -> RegionSelector:
    """Parse the wire encoding: admin:d1/s1 · community:c1 · grid:g1,g2 ·
    bbox:minlon,minlat,maxlon,maxlat. Region ids are AdminRegion local ids."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise UnknownRegion(f"region selector {text!r} has no prefix")
    region_id = lambda local: EntityId(EntityKind.ADMIN_REGION, local)
    if kind == "admin":
        parts = [p for p in rest.split("/") if p]
        if not parts:
            raise UnknownRegion(f"empty admin prefix in {text!r}")
        return AdminPrefix(tuple(region_id(p) for p in parts))
    if kind == "community":
        if not rest:
            raise UnknownRegion(f"empty community id in {text!r}")
        return Community(region_id(rest))
    if kind == "grid":
        parts = [p for p in rest.split(",") if p]
        return GridRange(tuple(region_id(p) for p in parts))
    if kind == "bbox":
        try:
            mnl, mnt, mxl, mxt = (float(v) for v in rest.split(","))
        except ValueError:
            raise UnknownRegion(f"bad bbox in {text!r}") from None
        return Box(BBox(mnl, mnt, mxl, mxt))
    raise UnknownRegion(f"unknown region selector kind {kind!r}")


def _check_region_ids(regions: AdminRegions, ids, level: str | None) -> None:
    for rid in ids:
        region = regions.region(rid)
        if region is None or (level is not None and region.level != level):
            raise UnknownRegion(str(rid))


def locate_entity(store: EventStore, index: SpatialIndex, entity: EntityId, t: int) -> GeoPoint | None:
    """Point location for an entity: its own geometry if indexed, otherwise
    the first located entity reachable via LivesIn/PartOf/LocatedIn links."""
    frontier = [entity]
    seen = {entity}
    for _ in range(_LOCATE_MAX_HOPS + 1):
        next_frontier: list[EntityId] = []
        for node in frontier:
            entry = index.get(node)
            if entry is not None:
                return representative_point(entry.geometry)
            for predicate in _LOCATE_PREDICATES:
                for rel in sorted(
                    store.relations_of(node, predicate, t, "out"), key=lambda r: r.object.canonical
                ):
                    if rel.object not in seen:
                        seen.add(rel.object)
                        next_frontier.append(rel.object)
        if not next_frontier:
            return None
        frontier = next_frontier
    return None


def select_entities(
    store: EventStore,
    index: SpatialIndex,
    regions: AdminRegions,
    selector: RegionSelector,
    kind: EntityKind,
    t: int,
) -> set[EntityId]:
    """Entities of `kind` live at t whose location falls inside the region."""
    if isinstance(selector, AdminPrefix):
        for rid, level in zip(selector.levels, ADMIN_LEVELS):
            _check_region_ids(regions, [rid], level)
    elif isinstance(selector, Community):
        _check_region_ids(regions, [selector.community], "community")
    elif isinstance(selector, GridRange):
        _check_region_ids(regions, selector.grids, "grid_cell")
        if not selector.grids:
            return set()
        grid_set = set(selector.grids)

    picked: set[EntityId] = set()
    for entity in store.entity_ids(kind):
        if store.state_at(entity, t) is None:
            continue
        p = locate_entity(store, index, entity, t)
        if p is None:
            continue
        if isinstance(selector, Box):
            if selector.box.contains_point(p):
                picked.add(entity)
            continue
        try:
            path = regions.assign(p)
        except Unassigned:
            continue
        if isinstance(selector, AdminPrefix):
            if path.levels()[: len(selector.levels)] == selector.levels:
                picked.add(entity)
        elif isinstance(selector, Community):
            if path.community == selector.community:
                picked.add(entity)
        else:
            if path.grid_cell in grid_set:
                picked.add(entity)
    return picked


# ---------------------------------------------------------------- composition


@dataclass(frozen=True)
class CategoryMap:
    """Total mapping from attribute values to labels.

    Either the identity map (label = the value's string form) or ordered
    half-open numeric ranges [lo, hi) with hi=None meaning unbounded.
    Values that fit nowhere — and missing attributes — land in "unknown".
    """

    range_bins: tuple[tuple[str, float, float | None], ...] | None = None

    @classmethod
    def identity(cls) -> "CategoryMap":
        return cls(None)

    @classmethod
    def ranges(cls, bins) -> "CategoryMap":
        return cls(tuple((str(label), float(lo), None if hi is None else float(hi)) for label, lo, hi in bins))

    def label_for(self, value) -> str:
        if value is None:
            return UNKNOWN_LABEL
        if self.range_bins is None:
            if isinstance(value, bool):
                return "true" if value else "false"
            return str(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return UNKNOWN_LABEL
        for label, lo, hi in self.range_bins:
            if value >= lo and (hi is None or value < hi):
                return label
        return UNKNOWN_LABEL

    def label_order(self, seen_labels) -> list[str]:
        """Deterministic category order: declared range order, or sorted
        labels for the identity map; "unknown" always last."""
        if self.range_bins is not None:
            declared = [label for label, _, _ in self.range_bins if label in seen_labels]
        else:
            declared = sorted(lbl for lbl in seen_labels if lbl != UNKNOWN_LABEL)
        if UNKNOWN_LABEL in seen_labels:
            declared.append(UNKNOWN_LABEL)
        return declared


@dataclass(frozen=True)
class CompositionBreakdown:
    attribute: str
    total: int
    categories: tuple[tuple[str, int, float], ...]


def composition(
    store: EventStore,
    entities,
    attribute: str,
    category_map: CategoryMap,
    t: int,
) -> CompositionBreakdown:
    counts: dict[str, int] = {}
    total = 0
    for entity in entities:
        state = store.state_at(entity, t)
        if state is None:
            continue
        label = category_map.label_for(state.attributes.get(attribute))
        counts[label] = counts.get(label, 0) + 1
        total += 1
    order = category_map.label_order(counts.keys())
    categories = tuple((label, counts[label], counts[label] / total) for label in order)
    return CompositionBreakdown(attribute=attribute, total=total, categories=categories)


# ------------------------------------------------------------------ numerics


@dataclass(frozen=True)
class HistogramSpec:
    min: float
    max: float
    bin_count: int

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.min >= self.max:
            raise InvalidRange(f"histogram bounds [{self.min}, {self.max}] invalid")
        if self.bin_count < 1:
            raise InvalidRange(f"bin_count {self.bin_count} < 1")


def histogram(values, spec: HistogramSpec) -> list[int]:
    """Uniform-bin counts; bins [min+i·w, min+(i+1)·w), last bin right-closed."""
    counts = [0] * spec.bin_count
    width = (spec.max - spec.min) / spec.bin_count
    for v in values:
        if v < spec.min or v > spec.max:
            raise OutOfRange(f"value {v} outside [{spec.min}, {spec.max}]")
        idx = int(math.floor((v - spec.min) / width))
        if idx >= spec.bin_count:  # v == max (and float noise at the top edge)
            idx = spec.bin_count - 1
        counts[idx] += 1
    return counts


@dataclass(frozen=True)
class NormalFit:
    mean: float
    stddev: float
    degenerate: bool


def fit_normal(values) -> NormalFit:
    """Population mean/stddev via Welford's single-pass recurrence."""
    n = 0
    mean = 0.0
    m2 = 0.0
    for v in values:
        n += 1
        delta = v - mean
        mean += delta / n
        m2 += delta * (v - mean)
    if n < 2:
        raise TooFewValues(f"need at least 2 values, got {n}")
    stddev = math.sqrt(m2 / n)
    return NormalFit(mean=mean, stddev=stddev, degenerate=stddev == 0.0)


# ------------------------------------------------------------------- heat/dot


@dataclass(frozen=True, eq=False)
class HeatGrid:
    origin: GeoPoint
    cell_size: float
    rows: int
    cols: int
    values: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.values.sum())


def heat_grid(points, box: BBox, cell_size: float, smoothing_sigma_cells: float = 0.0) -> HeatGrid:
    """Count grid over the box with optional mass-preserving Gaussian blur.

    Binning is floor-indexed; a point exactly on a shared cell edge goes to
    the lower-indexed (left/bottom) cell. The blur kernel is truncated at
    3σ and renormalized over the surviving window, so total mass is kept.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    if smoothing_sigma_cells < 0:
        raise ValueError("smoothing sigma must be >= 0")
    pts = list(points)
    for p in pts:
        if not box.contains_point(p):
            raise PointOutsideBox(f"({p.lon}, {p.lat}) outside {box}")
    rows, cols = grid_shape(box, cell_size)
    xs = np.array([p.lon for p in pts], dtype=np.float64)
    ys = np.array([p.lat for p in pts], dtype=np.float64)
    values = np.asarray(K.bin_points(xs, ys, box.min_lon, box.min_lat, cell_size, rows, cols))
    if smoothing_sigma_cells > 0:
        values = np.asarray(K.blur_grid(values, rows, cols, smoothing_sigma_cells))
    return HeatGrid(
        origin=GeoPoint(box.min_lon, box.min_lat),
        cell_size=cell_size,
        rows=rows,
        cols=cols,
        values=values,
    )


@dataclass(frozen=True)
class DottedMap:
    dots: tuple[tuple[EntityId, GeoPoint, str], ...]
    skipped: int


def dotted_map(
    store: EventStore,
    index: SpatialIndex,
    entities,
    attribute: str,
    t: int,
    category_map: CategoryMap | None = None,
) -> DottedMap:
    """One dot per locatable entity at its exact point, labeled by attribute."""
    cmap = category_map if category_map is not None else CategoryMap.identity()
    dots = []
    skipped = 0
    for entity in sorted(entities, key=lambda e: e.canonical):
        state = store.state_at(entity, t)
        p = locate_entity(store, index, entity, t) if state is not None else None
        if p is None:
            skipped += 1
            continue
        dots.append((entity, p, cmap.label_for(state.attributes.get(attribute))))
    return DottedMap(dots=tuple(dots), skipped=skipped)
