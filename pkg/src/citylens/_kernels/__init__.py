"""Hot-loop kernels with backend selection at import.

The compiled extension (`_native`, built from Cython) is preferred; the
pure-Python module (`_pure`) is the reference implementation and the
fallback. Set ``CITYLENS_PURE_KERNELS=1`` to force the fallback, e.g. for
benchmarking or debugging. `BACKEND` records which one is active.
"""

import os

from . import _pure

if os.environ.get("CITYLENS_PURE_KERNELS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

EARTH_RADIUS_M = _pure.EARTH_RADIUS_M

haversine_m = _impl.haversine_m
tile_xy = _impl.tile_xy
point_on_segment = _impl.point_on_segment
point_segment_dist = _impl.point_segment_dist
segments_cross = _impl.segments_cross
point_in_ring = _impl.point_in_ring
ring_self_intersects = _impl.ring_self_intersects
ring_area = _impl.ring_area
ring_centroid = _impl.ring_centroid
segment_intersects_rect = _impl.segment_intersects_rect
ring_intersects_rect = _impl.ring_intersects_rect
polyline_intersects_rect = _impl.polyline_intersects_rect
point_on_polyline = _impl.point_on_polyline
polyline_length_m = _impl.polyline_length_m
bin_points = _impl.bin_points
blur_grid = _impl.blur_grid

__all__ = [
    "BACKEND",
    "EARTH_RADIUS_M",
    "haversine_m",
    "tile_xy",
    "point_on_segment",
    "point_segment_dist",
    "segments_cross",
    "point_in_ring",
    "ring_self_intersects",
    "ring_area",
    "ring_centroid",
    "segment_intersects_rect",
    "ring_intersects_rect",
    "polyline_intersects_rect",
    "point_on_polyline",
    "polyline_length_m",
    "bin_points",
    "blur_grid",
]
