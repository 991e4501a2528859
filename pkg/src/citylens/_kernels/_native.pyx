# cython: language_level=3
"""Compiled geometry, tile, and grid kernels.

Mirrors `citylens._kernels._pure` function-for-function; the pure module's
docstring is the contract. Buffers are C-contiguous float64.
"""

from libc.math cimport atan2, ceil, cos, exp, fabs, floor, hypot, log, sin, sqrt, tan, M_PI

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

cdef double _R = 6_371_000.0
cdef double _EPS = 1e-12
cdef double _DEG = M_PI / 180.0


cpdef double haversine_m(double lon1, double lat1, double lon2, double lat2):
    cdef double phi1 = lat1 * _DEG
    cdef double phi2 = lat2 * _DEG
    cdef double dphi = (lat2 - lat1) * _DEG
    cdef double dlam = (lon2 - lon1) * _DEG
    cdef double sp = sin(dphi / 2.0)
    cdef double sl = sin(dlam / 2.0)
    cdef double a = sp * sp + cos(phi1) * cos(phi2) * sl * sl
    return 2.0 * _R * atan2(sqrt(a), sqrt(1.0 - a))


cpdef tuple tile_xy(double lon, double lat, int z):
    cdef long n = 1 << z
    cdef long x = <long>floor((lon + 180.0) / 360.0 * n)
    cdef double latr = lat * _DEG
    cdef long y = <long>floor((1.0 - log(tan(latr) + 1.0 / cos(latr)) / M_PI) / 2.0 * n)
    if x < 0:
        x = 0
    elif x >= n:
        x = n - 1
    if y < 0:
        y = 0
    elif y >= n:
        y = n - 1
    return x, y


cdef bint _on_segment(double px, double py, double ax, double ay,
                      double bx, double by, double tol) nogil:
    cdef double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    cdef double lo, hi
    if fabs(cross) > tol:
        return False
    if ax <= bx:
        lo = ax; hi = bx
    else:
        lo = bx; hi = ax
    if px < lo - tol or px > hi + tol:
        return False
    if ay <= by:
        lo = ay; hi = by
    else:
        lo = by; hi = ay
    return lo - tol <= py <= hi + tol


def point_on_segment(double px, double py, double ax, double ay,
                     double bx, double by, double tol=1e-12):
    return bool(_on_segment(px, py, ax, ay, bx, by, tol))


cpdef double point_segment_dist(double px, double py, double ax, double ay,
                                double bx, double by):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double len2 = dx * dx + dy * dy
    cdef double t
    if len2 == 0.0:
        return hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / len2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return hypot(px - (ax + t * dx), py - (ay + t * dy))


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef bint _segments_cross(double ax, double ay, double bx, double by,
                          double cx, double cy, double dx, double dy) nogil:
    cdef double d1 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double d2 = _orient(cx, cy, dx, dy, bx, by)
    cdef double d3 = _orient(ax, ay, bx, by, cx, cy)
    cdef double d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(ax, ay, cx, cy, dx, dy, 0.0):
        return True
    if d2 == 0 and _on_segment(bx, by, cx, cy, dx, dy, 0.0):
        return True
    if d3 == 0 and _on_segment(cx, cy, ax, ay, bx, by, 0.0):
        return True
    if d4 == 0 and _on_segment(dx, dy, ax, ay, bx, by, 0.0):
        return True
    return False


def segments_cross(double ax, double ay, double bx, double by,
                   double cx, double cy, double dx, double dy):
    return bool(_segments_cross(ax, ay, bx, by, cx, cy, dx, dy))


cdef bint _point_in_ring(double px, double py, double[::1] ring) nogil:
    cdef Py_ssize_t n = ring.shape[0] // 2
    cdef bint inside = False
    cdef double ax = ring[2 * n - 2]
    cdef double ay = ring[2 * n - 1]
    cdef double bx, by, xint
    cdef Py_ssize_t i
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        if _on_segment(px, py, ax, ay, bx, by, _EPS):
            return True
        if (ay > py) != (by > py):
            xint = ax + (py - ay) / (by - ay) * (bx - ax)
            if px < xint:
                inside = not inside
        ax = bx
        ay = by
    return inside


def point_in_ring(double px, double py, double[::1] ring):
    return bool(_point_in_ring(px, py, ring))


def ring_self_intersects(double[::1] ring):
    cdef Py_ssize_t n = ring.shape[0] // 2
    cdef Py_ssize_t i, j
    cdef double ax, ay, bx, by, cx, cy, dx, dy
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
            if _segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
                return True
    return False


cpdef double ring_area(double[::1] ring):
    cdef Py_ssize_t n = ring.shape[0] // 2
    cdef double acc = 0.0
    cdef double ax = ring[2 * n - 2]
    cdef double ay = ring[2 * n - 1]
    cdef double bx, by
    cdef Py_ssize_t i
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        acc += ax * by - bx * ay
        ax = bx
        ay = by
    return fabs(acc) / 2.0


def ring_centroid(double[::1] ring):
    cdef Py_ssize_t n = ring.shape[0] // 2
    cdef double a2 = 0.0, cx = 0.0, cy = 0.0, sx = 0.0, sy = 0.0
    cdef double ax = ring[2 * n - 2]
    cdef double ay = ring[2 * n - 1]
    cdef double bx, by, w
    cdef Py_ssize_t i
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        w = ax * by - bx * ay
        a2 += w
        cx += (ax + bx) * w
        cy += (ay + by) * w
        ax = bx
        ay = by
    if fabs(a2) < 1e-30:
        for i in range(n):
            sx += ring[2 * i]
            sy += ring[2 * i + 1]
        return sx / n, sy / n
    return cx / (3.0 * a2), cy / (3.0 * a2)


cdef inline bint _in_rect(double px, double py, double minx, double miny,
                          double maxx, double maxy) nogil:
    return minx <= px <= maxx and miny <= py <= maxy


cdef bint _seg_rect(double ax, double ay, double bx, double by,
                    double minx, double miny, double maxx, double maxy) nogil:
    if _in_rect(ax, ay, minx, miny, maxx, maxy) or _in_rect(bx, by, minx, miny, maxx, maxy):
        return True
    if (ax if ax > bx else bx) < minx or (ax if ax < bx else bx) > maxx:
        return False
    if (ay if ay > by else by) < miny or (ay if ay < by else by) > maxy:
        return False
    if _segments_cross(ax, ay, bx, by, minx, miny, maxx, miny):
        return True
    if _segments_cross(ax, ay, bx, by, maxx, miny, maxx, maxy):
        return True
    if _segments_cross(ax, ay, bx, by, maxx, maxy, minx, maxy):
        return True
    return _segments_cross(ax, ay, bx, by, minx, maxy, minx, miny)


def segment_intersects_rect(double ax, double ay, double bx, double by,
                            double minx, double miny, double maxx, double maxy):
    return bool(_seg_rect(ax, ay, bx, by, minx, miny, maxx, maxy))


def ring_intersects_rect(double[::1] ring, double minx, double miny,
                         double maxx, double maxy):
    cdef Py_ssize_t n = ring.shape[0] // 2
    cdef Py_ssize_t i
    cdef double ax, ay, bx, by
    for i in range(n):
        if _in_rect(ring[2 * i], ring[2 * i + 1], minx, miny, maxx, maxy):
            return True
    if _point_in_ring(minx, miny, ring):
        return True
    ax = ring[2 * n - 2]
    ay = ring[2 * n - 1]
    for i in range(n):
        bx = ring[2 * i]
        by = ring[2 * i + 1]
        if _seg_rect(ax, ay, bx, by, minx, miny, maxx, maxy):
            return True
        ax = bx
        ay = by
    return False


def polyline_intersects_rect(double[::1] line, double minx, double miny,
                             double maxx, double maxy):
    cdef Py_ssize_t n = line.shape[0] // 2
    cdef Py_ssize_t i
    if n == 1:
        return bool(_in_rect(line[0], line[1], minx, miny, maxx, maxy))
    for i in range(n - 1):
        if _seg_rect(line[2 * i], line[2 * i + 1], line[2 * i + 2], line[2 * i + 3],
                     minx, miny, maxx, maxy):
            return True
    return False


def point_on_polyline(double px, double py, double[::1] line, double tol):
    cdef Py_ssize_t n = line.shape[0] // 2
    cdef Py_ssize_t i
    if n == 1:
        return hypot(px - line[0], py - line[1]) <= tol
    for i in range(n - 1):
        if point_segment_dist(px, py, line[2 * i], line[2 * i + 1],
                              line[2 * i + 2], line[2 * i + 3]) <= tol:
            return True
    return False


cpdef double polyline_length_m(double[::1] line):
    cdef Py_ssize_t n = line.shape[0] // 2
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n - 1):
        total += haversine_m(line[2 * i], line[2 * i + 1], line[2 * i + 2], line[2 * i + 3])
    return total


def bin_points(double[::1] xs, double[::1] ys, double minx, double miny,
               double cell, int rows, int cols):
    out_arr = np.zeros(rows * cols, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef double fx, fy
    cdef long i, j
    for k in range(xs.shape[0]):
        fx = (xs[k] - minx) / cell
        fy = (ys[k] - miny) / cell
        i = <long>floor(fx)
        j = <long>floor(fy)
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
    return out_arr


def blur_grid(values, int rows, int cols, double sigma):
    if sigma <= 0.0:
        return np.array(values, dtype=np.float64, copy=True)
    cdef int radius = <int>ceil(3.0 * sigma)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    w_arr = np.empty(2 * radius + 1, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef int d
    for d in range(-radius, radius + 1):
        w[d + radius] = exp(-(<double>d * d) * inv)

    src_arr = np.ascontiguousarray(values, dtype=np.float64)
    mid_arr = np.zeros(rows * cols, dtype=np.float64)
    out_arr = np.zeros(rows * cols, dtype=np.float64)
    cdef double[::1] src = src_arr
    cdef double[::1] mid = mid_arr
    cdef double[::1] out = out_arr
    cdef int r, c, lo, hi, cc, rr
    cdef double v, s, scale

    for r in range(rows):
        for c in range(cols):
            v = src[r * cols + c]
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
                mid[r * cols + cc] += scale * w[cc - c + radius]

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
    return out_arr
