"""Geometry kernels against independent oracles, plus native/pure parity.

The oracles here are deliberately written a different way than the
kernels (vertical ray casting instead of horizontal, a 2-D window blur
instead of two separable passes, shapely for areas) so a shared bug
can't hide.
"""

import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point, Polygon

from citylens._kernels import _pure
from citylens.rng import SplitMix64

try:
    from citylens._kernels import _native
except ImportError:
    _native = None

BACKENDS = [_pure] if _native is None else [_pure, _native]


# ------------------------------------------------------------------- oracles


def ray_cast_contains_oracle(px, py, ring):
    """Even-odd containment casting the ray straight *up* (the kernel casts
    sideways); boundary points count as inside."""
    n = len(ring) // 2
    verts = [(ring[2 * i], ring[2 * i + 1]) for i in range(n)]
    for (ax, ay), (bx, by) in zip(verts, verts[1:] + verts[:1]):
        if _pure.point_segment_dist(px, py, ax, ay, bx, by) <= 1e-15:
            return True
    inside = False
    for (ax, ay), (bx, by) in zip(verts, verts[1:] + verts[:1]):
        if (ax > px) != (bx > px):
            yint = ay + (px - ax) / (bx - ax) * (by - ay)
            if py < yint:
                inside = not inside
    return inside


def blur_oracle(values, rows, cols, sigma):
    """Naive 2-D scatter blur: every source cell spreads its mass over the
    clipped (2r+1)² window with weights w[dx]·w[dy], renormalized over the
    surviving window so nothing leaks off the edges."""
    radius = int(math.ceil(3.0 * sigma))
    w = [math.exp(-(d * d) / (2.0 * sigma * sigma)) for d in range(-radius, radius + 1)]
    out = np.zeros(rows * cols)
    for r in range(rows):
        for c in range(cols):
            v = values[r * cols + c]
            if v == 0.0:
                continue
            window = [
                (rr, cc, w[rr - r + radius] * w[cc - c + radius])
                for rr in range(max(0, r - radius), min(rows - 1, r + radius) + 1)
                for cc in range(max(0, c - radius), min(cols - 1, c + radius) + 1)
            ]
            total = sum(weight for _, _, weight in window)
            for rr, cc, weight in window:
                out[rr * cols + cc] += v * weight / total
    return out


def bin_oracle(xs, ys, minx, miny, cell, rows, cols):
    """Per-point linear placement with the lower-edge rule, no vectorization."""
    out = np.zeros(rows * cols)
    for x, y in zip(xs, ys):
        col = min(cols - 1, max(0, math.floor((x - minx) / cell)))
        if col > 0 and x == minx + col * cell:
            col -= 1
        row = min(rows - 1, max(0, math.floor((y - miny) / cell)))
        if row > 0 and y == miny + row * cell:
            row -= 1
        out[row * cols + col] += 1
    return out


def _random_ring(rng, n_verts=8):
    """A star-shaped (hence simple) ring around a random center."""
    cx = rng.uniform() * 2 - 1
    cy = rng.uniform() * 2 - 1
    angles = sorted(rng.uniform() * 2 * math.pi for _ in range(n_verts))
    flat = []
    for a in angles:
        radius = 0.2 + rng.uniform() * 0.8
        flat += [cx + radius * math.cos(a), cy + radius * math.sin(a)]
    return np.array(flat)


# ---------------------------------------------------------------- containment


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit("_", 1)[-1])
def test_point_in_ring_matches_vertical_ray_oracle(impl):
    rng = SplitMix64(101)
    disagreements = 0
    for _ in range(60):
        ring = _random_ring(rng)
        for _ in range(40):
            px = rng.uniform() * 4 - 2
            py = rng.uniform() * 4 - 2
            if impl.point_in_ring(px, py, ring) != ray_cast_contains_oracle(px, py, ring):
                disagreements += 1
    assert disagreements == 0


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit("_", 1)[-1])
def test_point_in_ring_matches_shapely_off_boundary(impl):
    rng = SplitMix64(555)
    for _ in range(40):
        ring = _random_ring(rng)
        poly = Polygon([(ring[2 * i], ring[2 * i + 1]) for i in range(len(ring) // 2)])
        for _ in range(25):
            px = rng.uniform() * 4 - 2
            py = rng.uniform() * 4 - 2
            # keep clear of the boundary, where tolerance conventions differ
            if poly.exterior.distance(Point(px, py)) < 1e-9:
                continue
            assert impl.point_in_ring(px, py, ring) == poly.contains(Point(px, py))


def test_boundary_points_count_as_inside():
    square = np.array([0.0, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 2.0])
    assert _pure.point_in_ring(1.0, 0.0, square)  # edge
    assert _pure.point_in_ring(0.0, 0.0, square)  # vertex
    assert _pure.point_in_ring(2.0, 1.0, square)
    assert _pure.point_in_ring(1.0, 1.0, square)
    assert not _pure.point_in_ring(2.0000001, 1.0, square)


# ------------------------------------------------------------ area / centroid


def test_ring_area_matches_shapely():
    rng = SplitMix64(77)
    for _ in range(50):
        ring = _random_ring(rng, n_verts=10)
        poly = Polygon([(ring[2 * i], ring[2 * i + 1]) for i in range(len(ring) // 2)])
        assert _pure.ring_area(ring) == pytest.approx(poly.area, rel=1e-12)


def test_ring_centroid_matches_shapely():
    rng = SplitMix64(78)
    for _ in range(50):
        ring = _random_ring(rng, n_verts=10)
        poly = Polygon([(ring[2 * i], ring[2 * i + 1]) for i in range(len(ring) // 2)])
        cx, cy = _pure.ring_centroid(ring)
        assert cx == pytest.approx(poly.centroid.x, abs=1e-12)
        assert cy == pytest.approx(poly.centroid.y, abs=1e-12)


def test_degenerate_ring_centroid_falls_back_to_vertex_mean():
    collinear = np.array([0.0, 0.0, 1.0, 0.0, 2.0, 0.0])
    cx, cy = _pure.ring_centroid(collinear)
    assert (cx, cy) == (1.0, 0.0)


# ------------------------------------------------------- segments, rectangles


def test_segments_cross_matches_shapely():
    rng = SplitMix64(402)
    for _ in range(400):
        coords = [rng.uniform() * 2 - 1 for _ in range(8)]
        ours = _pure.segments_cross(*coords)
        theirs = LineString([coords[0:2], coords[2:4]]).intersects(LineString([coords[4:6], coords[6:8]]))
        assert ours == theirs


def test_segment_intersects_rect_cases():
    # crossing, inside, touching a corner, clean miss
    assert _pure.segment_intersects_rect(-1, 0.5, 2, 0.5, 0, 0, 1, 1)
    assert _pure.segment_intersects_rect(0.2, 0.2, 0.8, 0.8, 0, 0, 1, 1)
    assert _pure.segment_intersects_rect(1, 1, 2, 2, 0, 0, 1, 1)
    assert not _pure.segment_intersects_rect(1.1, 1.1, 2, 2, 0, 0, 1, 1)


def test_ring_intersects_rect_matches_shapely():
    rng = SplitMix64(403)
    for _ in range(150):
        ring = _random_ring(rng)
        poly = Polygon([(ring[2 * i], ring[2 * i + 1]) for i in range(len(ring) // 2)])
        x0 = rng.uniform() * 3 - 1.5
        y0 = rng.uniform() * 3 - 1.5
        w = rng.uniform() * 1.5
        h = rng.uniform() * 1.5
        rect = Polygon([(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)])
        if poly.exterior.distance(rect.exterior) < 1e-9 and not poly.intersects(rect):
            continue  # grazing contact: representation-dependent
        assert _pure.ring_intersects_rect(ring, x0, y0, x0 + w, y0 + h) == poly.intersects(rect)


# --------------------------------------------------------- distances and tiles


def test_haversine_one_degree_of_latitude():
    # R=6,371,000 m makes 1° of latitude 111,194.9266 m
    assert _pure.haversine_m(114.0, 22.0, 114.0, 23.0) == pytest.approx(111_194.9266, abs=0.01)


def test_haversine_symmetry_and_zero():
    assert _pure.haversine_m(10, 20, 30, 40) == _pure.haversine_m(30, 40, 10, 20)
    assert _pure.haversine_m(114.06, 22.54, 114.06, 22.54) == 0.0


def test_tile_xy_worked_examples():
    assert _pure.tile_xy(114.06, 22.54, 10) == (836, 446)
    assert _pure.tile_xy(0.0, 0.0, 1) == (1, 1)
    assert _pure.tile_xy(0.0, 0.0, 0) == (0, 0)
    assert _pure.tile_xy(-180.0, 0.0, 3) == (0, 4)  # equator floors into the southern row


def test_tile_xy_clamps_to_grid():
    for z in range(0, 8):
        n = 1 << z
        x, y = _pure.tile_xy(179.9999999, 85.0511, z)
        assert 0 <= x < n and 0 <= y < n
        x, y = _pure.tile_xy(-179.9999999, -85.0511, z)
        assert 0 <= x < n and 0 <= y < n


# ------------------------------------------------------------ binning and blur


def test_bin_points_matches_linear_oracle():
    rng = SplitMix64(9)
    xs = np.array([rng.uniform() * 10 for _ in range(500)])
    ys = np.array([rng.uniform() * 6 for _ in range(500)])
    ours = _pure.bin_points(xs, ys, 0.0, 0.0, 1.0, 6, 10)
    assert np.array_equal(np.asarray(ours), bin_oracle(xs, ys, 0.0, 0.0, 1.0, 6, 10))


def test_bin_points_shared_edge_goes_to_lower_cell():
    xs = np.array([1.0, 0.0, 3.0, 3.0])
    ys = np.array([1.0, 0.0, 2.0, 3.0])
    out = np.asarray(_pure.bin_points(xs, ys, 0.0, 0.0, 1.0, 3, 3))
    grid = out.reshape(3, 3)
    assert grid[0, 0] == 2.0  # (1,1) folds down-left; (0,0) stays put
    assert grid[1, 2] == 1.0  # (3,2): outer x-edge folds, interior y-edge folds
    assert grid[2, 2] == 1.0  # (3,3): outer corner lands in the last cell


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_blur_grid_matches_2d_window_oracle(sigma):
    rng = SplitMix64(31)
    rows, cols = 7, 11
    values = np.array([math.floor(rng.uniform() * 5) for _ in range(rows * cols)], dtype=np.float64)
    ours = np.asarray(_pure.blur_grid(values, rows, cols, sigma))
    assert np.allclose(ours, blur_oracle(values, rows, cols, sigma), atol=1e-12)


@pytest.mark.parametrize("sigma", [0.0, 1.0, 2.5])
def test_blur_grid_preserves_mass(sigma):
    rng = SplitMix64(32)
    rows, cols = 9, 9
    values = np.array([rng.uniform() * 3 for _ in range(rows * cols)])
    out = np.asarray(_pure.blur_grid(values, rows, cols, sigma))
    assert out.sum() == pytest.approx(values.sum(), abs=1e-9)


def test_blur_keeps_single_spike_centered():
    rows = cols = 11
    values = np.zeros(rows * cols)
    values[5 * cols + 5] = 8.0
    out = np.asarray(_pure.blur_grid(values, rows, cols, 1.0)).reshape(rows, cols)
    assert out[5, 5] == out.max()
    assert np.allclose(out, out.T)  # symmetric kernel, centered spike


# -------------------------------------------------------------------- parity


@pytest.mark.skipif(_native is None, reason="native extension not built")
def test_native_matches_pure_on_random_inputs():
    rng = SplitMix64(12345)
    for _ in range(200):
        ring = _random_ring(rng)
        px = rng.uniform() * 4 - 2
        py = rng.uniform() * 4 - 2
        assert _native.point_in_ring(px, py, ring) == _pure.point_in_ring(px, py, ring)
        assert _native.ring_area(ring) == _pure.ring_area(ring)
        assert _native.ring_centroid(ring) == _pure.ring_centroid(ring)
        assert _native.ring_self_intersects(ring) == _pure.ring_self_intersects(ring)
        rect = sorted((rng.uniform() * 2 - 1, rng.uniform() * 2 - 1)) + sorted(
            (rng.uniform() * 2 - 1, rng.uniform() * 2 - 1)
        )
        minx, maxx, miny, maxy = rect
        assert _native.ring_intersects_rect(ring, minx, miny, maxx, maxy) == _pure.ring_intersects_rect(
            ring, minx, miny, maxx, maxy
        )


@pytest.mark.skipif(_native is None, reason="native extension not built")
def test_native_matches_pure_scalar_kernels():
    rng = SplitMix64(54321)
    for _ in range(500):
        a = [rng.uniform() * 360 - 180, rng.uniform() * 170 - 85]
        b = [rng.uniform() * 360 - 180, rng.uniform() * 170 - 85]
        assert _native.haversine_m(*a, *b) == pytest.approx(_pure.haversine_m(*a, *b), rel=1e-14)
        z = int(rng.uniform() * 19)
        assert _native.tile_xy(a[0], a[1], z) == _pure.tile_xy(a[0], a[1], z)
        coords = [rng.uniform() for _ in range(8)]
        assert _native.segments_cross(*coords) == _pure.segments_cross(*coords)
        assert _native.point_segment_dist(*coords[:6]) == pytest.approx(
            _pure.point_segment_dist(*coords[:6]), rel=1e-14, abs=1e-300
        )


@pytest.mark.skipif(_native is None, reason="native extension not built")
def test_native_matches_pure_grid_kernels():
    rng = SplitMix64(222)
    xs = np.array([rng.uniform() * 5 for _ in range(300)])
    ys = np.array([rng.uniform() * 5 for _ in range(300)])
    ours = np.asarray(_native.bin_points(xs, ys, 0.0, 0.0, 0.5, 10, 10))
    ref = np.asarray(_pure.bin_points(xs, ys, 0.0, 0.0, 0.5, 10, 10))
    assert np.array_equal(ours, ref)
    blurred_native = np.asarray(_native.blur_grid(ref, 10, 10, 1.5))
    blurred_pure = np.asarray(_pure.blur_grid(ref, 10, 10, 1.5))
    assert np.allclose(blurred_native, blurred_pure, atol=1e-12)
