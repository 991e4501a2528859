"""Road conditions (line and plane forms) and schedule-driven route tracking.

Congestion thresholds: >= 40 km/h smooth, [20, 40) slow, < 20 congested.
A sample older than the 10-minute staleness window no longer colors its
segment — the segment reads "unknown" until fresh data arrives.
"""

from __future__ import annotations

import enum
import math
import threading
from bisect import bisect_right, insort
from dataclasses import dataclass, field

from citylens import _kernels as K
from citylens.errors import InvalidRange, NegativeSpeed, UnknownSegment, WrongKind
from citylens.geo import BBox, GeoPoint, Polyline, cell_bbox, grid_shape
from citylens.sdm.types import EntityId, EntityKind

STALENESS_MS = 10 * 60 * 1000

SMOOTH_MIN_KMH = 40.0
SLOW_MIN_KMH = 20.0


class CongestionLevel(enum.Enum):
    SMOOTH = "smooth"
    SLOW = "slow"
    CONGESTED = "congested"
    UNKNOWN = "unknown"


def level_of(speed_kmh: float) -> CongestionLevel:
    if speed_kmh >= SMOOTH_MIN_KMH:
        return CongestionLevel.SMOOTH
    if speed_kmh >= SLOW_MIN_KMH:
        return CongestionLevel.SLOW
    return CongestionLevel.CONGESTED


@dataclass(frozen=True)
class CongestionSample:
    segment_id: EntityId
    t: int
    speed_kmh: float

    def __post_init__(self):
        if not math.isfinite(self.speed_kmh) or self.speed_kmh < 0:
            raise NegativeSpeed(f"speed {self.speed_kmh} for {self.segment_id}")
        if self.segment_id.kind is not EntityKind.ROAD_SEGMENT:
            raise WrongKind(f"{self.segment_id} is not a road segment")


@dataclass(frozen=True)
class Frame:
    t: int
    levels: dict[EntityId, CongestionLevel]


@dataclass(frozen=True)
class ArealFrame:
    t: int
    box: BBox
    cell_size: float
    rows: int
    cols: int
    levels: tuple[CongestionLevel, ...]  # row-major


class TrafficStore:
    """Per-segment sorted sample runs; one writer lock, consistent reads."""

    def __init__(self):
        self._lock = threading.RLock()
        self._segments: dict[EntityId, Polyline] = {}
        self._times: dict[EntityId, list[int]] = {}
        self._speeds: dict[EntityId, dict[int, float]] = {}

    def register_segment(self, segment_id: EntityId, line: Polyline) -> None:
        if segment_id.kind is not EntityKind.ROAD_SEGMENT:
            raise WrongKind(f"{segment_id} is not a road segment")
        with self._lock:
            self._segments[segment_id] = line
            self._times.setdefault(segment_id, [])
            self._speeds.setdefault(segment_id, {})

    def segment_ids(self) -> list[EntityId]:
        with self._lock:
            return sorted(self._segments, key=lambda e: e.canonical)

    def segment_line(self, segment_id: EntityId) -> Polyline | None:
        with self._lock:
            return self._segments.get(segment_id)

    def ingest(self, sample: CongestionSample) -> None:
        """Accepts out-of-order timestamps; a duplicate (segment, t) replaces."""
        with self._lock:
            if sample.segment_id not in self._segments:
                raise UnknownSegment(str(sample.segment_id))
            speeds = self._speeds[sample.segment_id]
            if sample.t not in speeds:
                insort(self._times[sample.segment_id], sample.t)
            speeds[sample.t] = sample.speed_kmh

    def sample_count(self) -> int:
        with self._lock:
            return sum(len(ts) for ts in self._times.values())

    def fresh_speed(self, segment_id: EntityId, t: int) -> float | None:
        """Latest speed at or before t, if within the staleness window."""
        with self._lock:
            times = self._times.get(segment_id)
            if not times:
                return None
            idx = bisect_right(times, t) - 1
            if idx < 0:
                return None
            ts = times[idx]
            if t - ts > STALENESS_MS:
                return None
            return self._speeds[segment_id][ts]

    def conditions_at(self, t: int) -> Frame:
        """Line form: one level per registered segment (Unknown when stale)."""
        with self._lock:
            levels = {}
            for segment_id in self._segments:
                speed = self.fresh_speed(segment_id, t)
                levels[segment_id] = CongestionLevel.UNKNOWN if speed is None else level_of(speed)
            return Frame(t=t, levels=levels)

    def areal_conditions(self, t: int, box: BBox, cell_size: float) -> ArealFrame:
        """Plane form: per cell, level of the mean fresh speed over the
        segments whose polyline meets the cell; Unknown for empty cells."""
        rows, cols = grid_shape(box, cell_size)
        with self._lock:
            fresh: list[tuple[Polyline, float]] = []
            for segment_id, line in self._segments.items():
                speed = self.fresh_speed(segment_id, t)
                if speed is not None and geometry_hits_box(line, box):
                    fresh.append((line, speed))
            levels = []
            for row in range(rows):
                for col in range(cols):
                    cbox = cell_bbox(box, cell_size, row, col)
                    speeds = [s for line, s in fresh if geometry_hits_box(line, cbox)]
                    if speeds:
                        levels.append(level_of(math.fsum(speeds) / len(speeds)))
                    else:
                        levels.append(CongestionLevel.UNKNOWN)
        return ArealFrame(t=t, box=box, cell_size=cell_size, rows=rows, cols=cols, levels=tuple(levels))

    def replay_frames(self, t0: int, t1: int, step: int) -> list[Frame]:
        """Frames at t0, t0+step, … ≤ t1; each equals conditions_at there."""
        if t0 > t1:
            raise InvalidRange(f"t0 {t0} > t1 {t1}")
        if step <= 0:
            raise InvalidRange(f"step {step} must be positive")
        return [self.conditions_at(t) for t in range(t0, t1 + 1, step)]


def geometry_hits_box(line: Polyline, box: BBox) -> bool:
    return bool(
        K.polyline_intersects_rect(line._flat, box.min_lon, box.min_lat, box.max_lon, box.max_lat)
    )


# ------------------------------------------------------------------- tracking


class RouteStatus(enum.Enum):
    NOT_DEPARTED = "not_departed"
    EN_ROUTE = "en_route"
    ARRIVED = "arrived"


@dataclass(frozen=True)
class RouteSchedule:
    """A line's path with departure time and per-leg constant speeds."""

    line_id: EntityId
    line: Polyline
    t0: int
    speeds_kmh: tuple[float, ...]
    leg_lengths_m: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        legs = len(self.line.points) - 1
        if len(self.speeds_kmh) != legs:
            raise InvalidRange(f"{legs} legs but {len(self.speeds_kmh)} speeds")
        if any(s <= 0 or not math.isfinite(s) for s in self.speeds_kmh):
            raise InvalidRange("leg speeds must be positive")
        lengths = []
        for a, b in zip(self.line.points, self.line.points[1:]):
            lengths.append(K.haversine_m(a.lon, a.lat, b.lon, b.lat))
        object.__setattr__(self, "leg_lengths_m", tuple(lengths))

    @property
    def total_length_m(self) -> float:
        return math.fsum(self.leg_lengths_m)

    def distance_at(self, t: int) -> float:
        """Arc distance traveled by time t (clamped to the route length)."""
        if t <= self.t0:
            return 0.0
        budget_h = (t - self.t0) / 3_600_000.0
        traveled = 0.0
        for leg_m, speed in zip(self.leg_lengths_m, self.speeds_kmh):
            leg_h = (leg_m / 1000.0) / speed
            if budget_h <= leg_h:
                return traveled + (budget_h / leg_h) * leg_m
            budget_h -= leg_h
            traveled += leg_m
        return traveled


def route_position(sched: RouteSchedule, t: int) -> tuple[GeoPoint, RouteStatus]:
    """Interpolated position along the route at time t."""
    if t < sched.t0:
        return sched.line.points[0], RouteStatus.NOT_DEPARTED
    dist = sched.distance_at(t)
    if dist >= sched.total_length_m:
        return sched.line.points[-1], RouteStatus.ARRIVED
    return sched.line.point_at_m(dist), RouteStatus.EN_ROUTE
