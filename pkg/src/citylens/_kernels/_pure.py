"""Pure-Python geometry, tile, and grid kernels.

Reference implementation of the hot inner loops; `_native.pyx` mirrors these
functions one-for-one. Rings and polylines are flat float64 buffers
``[x0, y0, x1, y1, ...]`` (rings implicitly closed). Coordinates are
lon/lat degrees. The numeric conventions both backends must share:

- point-in-ring: even-odd crossing rule, boundary counts as inside
  (boundary detected with a 1e-12 cross-product slop);
- great-circle distance: spherical earth, R = 6,371,000 m;
- tile addressing: slippy floor formulas, x/y clamped to ``2^z - 1``;
- grid binning: floor index, a point exactly on a shared cell edge goes to
  the lower-indexed cell, the far box edge folds into the last cell;
- grid smoothing: 1D Gaussian truncated at ceil(3*sigma), renormalized over
  the surviving window (grid edges clip the window, which keeps total mass
  exactly conserved), applied separably along columns then rows.
"""

import math

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
_EPS = 1e-12


def haversine_m(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371,000 m."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))


def tile_xy(lon: float, lat: float, z: int) -> tuple[int, int]:
    """Slippy tile (x, y) for a lon/lat at zoom z, clamped to the grid."""
    n = 1 << z
    x = int(math.floor((lon + 180.0) / 360.0 * n))
    latr = math.radians(lat)
    y = int(math.floor((1.0 - math.log(math.tan(latr) + 1.0 / math.cos(latr)) / math.pi) / 2.0 * n))
    if x < 0:
        x = 0
    elif x >= n:
        x = n - 1
    if y < 0:
        y = 0
    elif y >= n:
        y = n - 1
    return x, y


def point_on_segment(px, py, ax, ay, bx, by, tol: float = _EPS) -> bool:
    """True if (px,py) lies on segment a-b within a cross-product slop."""
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > tol:
        return False
    lo, hi = (ax, bx) if ax <= bx else (bx, ax)
    if px < lo - tol or px > hi + tol:
        return False
    lo, hi = (ay, by) if ay <= by else (by, ay)
    return lo - tol <= py <= hi + tol


def point_segment_dist(px, py, ax, ay, bx, by) -> float:
    """Planar distance from point to segment (same units as the inputs)."""
    dx = bx - ax
    dy = by - ay
    len2 = dx * dx + dy * dy
    if len2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / len2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    """True if segments a-b and c-d intersect, touching included."""
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and point_on_segment(ax, ay, cx, cy, dx, dy, 0.0):
        return True
    if d2 == 0 and point_on_segment(bx, by, cx, cy, dx, dy, 0.0):
        return True
    if d3 == 0 and point_on_segment(cx, cy, ax, ay, bx, by, 0.0):
        return True
    if d4 == 0 and point_on_segment(dx, dy, ax, ay, bx, by, 0.0):
        return True
    return False


def point_in_ring(px: float, py: float, ring) -> bool:
    """Even-odd containment in an implicitly closed ring; boundary is inside."""
    n = len(ring) // 2
    inside = False
    ax = ring[2 * n - 2]
    ay = ring[2 * n - 1]
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        if point_on_segment(px, py, ax, ay, bx, by):
            return True
        if (ay > py) != (by > py):
            xint = ax + (py - ay) / (by - ay) * (bx - ax)
            if px < xint:
                inside = not inside
        ax = bx
        ay = by
    return inside


def ring_self_intersects(ring) -> bool:
    """True if any two non-adjacent edges of the ring touch or cross."""
    n = len(ring) // 2
    for i in range(n):
        ax = ring[2 * i]
        ay = ring[2 * i + 1]
        bx = ring[(2 * i + 2) % (2 * n)]
        by = ring[(2 * i + 3) % (2 * n)]
        for j in range(i + 1, n):
            if j == i or j == (i + 1) % n or (j + 1) % n == i:
                continue
            cx = ring[2 * j]
            cy = ring[2 * j + 1]
            dx = ring[(2 * j + 2) % (2 * n)]
            dy = ring[(2 * j + 3) % (2 * n)]
            if segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
                return True
    return False


def ring_area(ring) -> float:
    """Absolute shoelace area of the ring in squared input units."""
    n = len(ring) // 2
    acc = 0.0
    ax = ring[2 * n - 2]
    ay = ring[2 * n - 1]
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        acc += ax * by - bx * ay
        ax = bx
        ay = by
    return abs(acc) / 2.0


def ring_centroid(ring) -> tuple[float, float]:
    """Area centroid of the ring; vertex mean if the area degenerates."""
    n = len(ring) // 2
    a2 = 0.0
    cx = 0.0
    cy = 0.0
    ax = ring[2 * n - 2]
    ay = ring[2 * n - 1]
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        w = ax * by - bx * ay
        a2 += w
        cx += (ax + bx) * w
        cy += (ay + by) * w
        ax = bx
        ay = by
    if abs(a2) < 1e-30:
        sx = 0.0
        sy = 0.0
        for i in range(n):
            sx += ring[2 * i]
            sy += ring[2 * i + 1]
        return sx / n, sy / n
    return cx / (3.0 * a2), cy / (3.0 * a2)


def _point_in_rect(px, py, minx, miny, maxx, maxy) -> bool:
    return minx <= px <= maxx and miny <= py <= maxy


def segment_intersects_rect(ax, ay, bx, by, minx, miny, maxx, maxy) -> bool:
    """True if segment a-b touches the axis-aligned rectangle."""
    if _point_in_rect(ax, ay, minx, miny, maxx, maxy) or _point_in_rect(bx, by, minx, miny, maxx, maxy):
        return True
    # quick reject on the segment bbox
    if max(ax, bx) < minx or min(ax, bx) > maxx or max(ay, by) < miny or min(ay, by) > maxy:
        return False
    return (
        segments_cross(ax, ay, bx, by, minx, miny, maxx, miny)
        or segments_cross(ax, ay, bx, by, maxx, miny, maxx, maxy)
        or segments_cross(ax, ay, bx, by, maxx, maxy, minx, maxy)
        or segments_cross(ax, ay, bx, by, minx, maxy, minx, miny)
    )


def ring_intersects_rect(ring, minx, miny, maxx, maxy) -> bool:
    """True if the ring's interior or boundary meets the rectangle."""
    n = len(ring) // 2
    for i in range(n):
        if _point_in_rect(ring[2 * i], ring[2 * i + 1], minx, miny, maxx, maxy):
            return True
    # rectangle fully inside the ring
    if point_in_ring(minx, miny, ring):
        return True
    ax = ring[2 * n - 2]
    ay = ring[2 * n - 1]
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        if segment_intersects_rect(ax, ay, bx, by, minx, miny, maxx, maxy):
            return True
        ax = bx
        ay = by
    return False


def polyline_intersects_rect(line, minx, miny, maxx, maxy) -> bool:
    """True if any polyline segment touches the rectangle."""
    n = len(line) // 2
    if n == 1:
        return _point_in_rect(line[0], line[1], minx, miny, maxx, maxy)
    for i in range(n - 1):
        if segment_intersects_rect(
            line[2 * i], line[2 * i + 1], line[2 * i + 2], line[2 * i + 3], minx, miny, maxx, maxy
        ):
            return True
    return False


def point_on_polyline(px, py, line, tol: float) -> bool:
    """True if the point lies within tol (planar) of any polyline segment."""
    n = len(line) // 2
    if n == 1:
        return math.hypot(px - line[0], py - line[1]) <= tol
    for i in range(n - 1):
        if point_segment_dist(px, py, line[2 * i], line[2 * i + 1], line[2 * i + 2], line[2 * i + 3]) <= tol:
            return True
    return False


def polyline_length_m(line) -> float:
    """Great-circle length of a lon/lat polyline in meters."""
    n = len(line) // 2
    total = 0.0
    for i in range(n - 1):
        total += haversine_m(line[2 * i], line[2 * i + 1], line[2 * i + 2], line[2 * i + 3])
    return total


def bin_points(xs, ys, minx: float, miny: float, cell: float, rows: int, cols: int):
    """Count points into a row-major rows*cols grid anchored at (minx, miny).

    Callers validate that points are inside the box; here out-of-range
    indices are clamped. A point exactly on a shared edge goes to the
    lower-indexed cell.
    """
    out = np.zeros(rows * cols, dtype=np.float64)
    for k in range(len(xs)):
        fx = (xs[k] - minx) / cell
        fy = (ys[k] - miny) / cell
        i = int(math.floor(fx))
        j = int(math.floor(fy))
        if i == fx and i > 0:
            i -= 1
        if j == fy and j > 0:
            j -= 1
        if i < 0:
            i = 0
        elif i >= cols:
            i = cols - 1
        if j < 0:
            j = 0
        elif j >= rows:
            j = rows - 1
        out[j * cols + i] += 1.0
    return out


def _gauss_weights(sigma: float) -> list[float]:
    radius = int(math.ceil(3.0 * sigma))
    inv = 1.0 / (2.0 * sigma * sigma)
    return [math.exp(-(d * d) * inv) for d in range(-radius, radius + 1)]


def blur_grid(values, rows: int, cols: int, sigma: float):
    """Mass-preserving separable Gaussian blur of a row-major grid.

    The kernel is truncated at ceil(3*sigma) and renormalized over whatever
    part of the window survives clipping (truncation and grid edges alike),
    so the grid total is conserved exactly.
    """
    if sigma <= 0.0:
        return np.array(values, dtype=np.float64, copy=True)
    w = _gauss_weights(sigma)
    radius = len(w) // 2

    src = np.asarray(values, dtype=np.float64)
    mid = np.zeros(rows * cols, dtype=np.float64)
    for r in range(rows):
        base = r * cols
        for c in range(cols):
            v = src[base + c]
            if v == 0.0:
                continue
            lo = c - radius
            if lo < 0:
                lo = 0
            hi = c + radius
            if hi > cols - 1:
                hi = cols - 1
            s = 0.0
            for cc in range(lo, hi + 1):
                s += w[cc - c + radius]
            scale = v / s
            for cc in range(lo, hi + 1):
                mid[base + cc] += scale * w[cc - c + radius]

    out = np.zeros(rows * cols, dtype=np.float64)
    for c in range(cols):
        for r in range(rows):
            v = mid[r * cols + c]
            if v == 0.0:
                continue
            lo = r - radius
            if lo < 0:
                lo = 0
            hi = r + radius
            if hi > rows - 1:
                hi = rows - 1
            s = 0.0
            for rr in range(lo, hi + 1):
                s += w[rr - r + radius]
            scale = v / s
            for rr in range(lo, hi + 1):
                out[rr * cols + c] += scale * w[rr - r + radius]
    return out
