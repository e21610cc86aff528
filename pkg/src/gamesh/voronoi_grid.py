"""Per-face Delaunay triangulation from a discrete Voronoi grid (numba kernels).

Sites live in the equilateral triangle (0,0), (1,0), (1/2, sqrt(3)/2); ids 0-2
are its corners. The grid spans the triangle's bounding box plus a margin so
Voronoi vertices just outside the triangle are still seen.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from numba import types
from numba.typed import Dict
from scipy.spatial import cKDTree

SQRT3_2 = math.sqrt(3.0) / 2.0
EQUILATERAL = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3_2]])
GRID_MARGIN = 0.25
BRUTE_FORCE_SITES = 64
ORIENT_TOL = 1e-12
TOTAL_ORIENT = SQRT3_2  # twice the equilateral triangle's area

OK, NO_VISIBLE_SITE, CANNOT_CLOSE, INCOMPLETE = 0, 1, 2, 3


def grid_shape(res: int) -> tuple[int, int]:
    nx = int(math.ceil((1.0 + 2 * GRID_MARGIN) * res)) + 1
    ny = int(math.ceil((SQRT3_2 + 2 * GRID_MARGIN) * res)) + 1
    return nx, ny


def grid_nodes(res: int) -> np.ndarray:
    nx, ny = grid_shape(res)
    xs = -GRID_MARGIN + np.arange(nx) / res
    ys = -GRID_MARGIN + np.arange(ny) / res
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


@numba.njit(cache=True)
def _brute_field(pts, nx, ny, res, margin):
    lab = np.empty((nx, ny), dtype=np.int64)
    n = pts.shape[0]
    for i in range(nx):
        x = -margin + i / res
        for j in range(ny):
            y = -margin + j / res
            best = np.inf
            arg = 0
            for s in range(n):
                dx = x - pts[s, 0]
                dy = y - pts[s, 1]
                d = dx * dx + dy * dy
                if d < best:
                    best = d
                    arg = s
            lab[i, j] = arg
    return lab


def nearest_site_field(pts: np.ndarray, res: int) -> np.ndarray:
    """Index of the nearest site at every grid node, shape ``grid_shape(res)``.

    Equidistant nodes go to the lowest site id.
    """
    nx, ny = grid_shape(res)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if len(pts) <= BRUTE_FORCE_SITES:
        return _brute_field(pts, nx, ny, float(res), GRID_MARGIN)
    _, lab = cKDTree(pts).query(grid_nodes(res))
    return lab.reshape(nx, ny).astype(np.int64)


@numba.njit(cache=True)
def _sorted3(a, b, c):
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    return a, b, c


@numba.njit(cache=True)
def _window_triples(lab):
    """Sorted site triples of 2x2 windows touching three or four sites."""
    nx, ny = lab.shape
    out = np.empty((2 * (nx - 1) * (ny - 1), 3), dtype=np.int64)
    m = 0
    for i in range(nx - 1):
        for j in range(ny - 1):
            # window corners in cyclic order
            q0 = lab[i, j]
            q1 = lab[i + 1, j]
            q2 = lab[i + 1, j + 1]
            q3 = lab[i, j + 1]
            if q0 == q1 and q1 == q2 and q2 == q3:
                continue
            # distinct values among the four
            u0 = q0
            u1 = q1
            nu = 1 if q1 == q0 else 2
            u2 = -1
            if q2 != q0 and q2 != q1:
                if nu == 1:
                    u1 = q2
                else:
                    u2 = q2
                nu += 1
            if q3 != q0 and q3 != q1 and q3 != q2:
                if nu == 1:
                    u1 = q3
                elif nu == 2:
                    u2 = q3
                nu += 1
            if nu == 3:
                a, b, c = _sorted3(u0, u1, u2)
                out[m, 0] = a
                out[m, 1] = b
                out[m, 2] = c
                m += 1
            elif nu == 4:
                # split along the diagonal through the lowest site id
                lo = min(q0, q1, q2, q3)
                if lo == q0 or lo == q2:
                    a, b, c = _sorted3(q0, q1, q2)
                    d, e, f = _sorted3(q0, q2, q3)
                else:
                    a, b, c = _sorted3(q1, q2, q3)
                    d, e, f = _sorted3(q1, q3, q0)
                out[m, 0] = a
                out[m, 1] = b
                out[m, 2] = c
                out[m + 1, 0] = d
                out[m + 1, 1] = e
                out[m + 1, 2] = f
                m += 2
    return out[:m]


def grid_candidates(pts: np.ndarray, res: int) -> np.ndarray:
    """Candidate Delaunay triangles (sorted triples) read off the grid."""
    T = _window_triples(nearest_site_field(pts, res))
    if len(T) == 0:
        return T
    n = len(pts)
    code = np.unique((T[:, 0] * n + T[:, 1]) * n + T[:, 2])
    return np.stack([code // (n * n), (code // n) % n, code % n], axis=1)


# -------------------------------------------------------------- assembly

@numba.njit(cache=True)
def _orient(pts, a, b, c):
    return (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1]) - (
        pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0])


@numba.njit(cache=True)
def _crosses(pts, sega, segb, ns, a, b):
    for i in range(ns):
        p = sega[i]
        q = segb[i]
        if p == a or p == b or q == a or q == b:
            continue
        d1 = _orient(pts, a, b, p)
        d2 = _orient(pts, a, b, q)
        if d1 * d2 >= 0.0:
            continue
        d3 = _orient(pts, p, q, a)
        d4 = _orient(pts, p, q, b)
        if d3 * d4 < 0.0:
            return True
    return False


@numba.njit(cache=True)
def _can_add(pts, tris, ecount, efirst, sega, segb, ns, a, b, c, tol):
    n = pts.shape[0]
    if _orient(pts, a, b, c) <= tol:
        return False
    for s in range(n):
        if s == a or s == b or s == c:
            continue
        if (_orient(pts, b, c, s) >= -tol and _orient(pts, c, a, s) >= -tol
                and _orient(pts, a, b, s) >= -tol):
            return False
    for e in range(3):
        if e == 0:
            u, v, w = a, b, c
        elif e == 1:
            u, v, w = b, c, a
        else:
            u, v, w = c, a, b
        key = min(u, v) * n + max(u, v)
        cnt = ecount.get(key, 0)
        if cnt >= 2:
            return False
        if cnt == 1:
            t = efirst[key]
            o = tris[t, 0] + tris[t, 1] + tris[t, 2] - u - v
            if _orient(pts, u, v, o) * _orient(pts, u, v, w) >= 0.0:
                return False
        elif _crosses(pts, sega, segb, ns, u, v):
            return False
    return True


@numba.njit(cache=True)
def _add(tris, nt, ecount, efirst, sega, segb, ns, n, a, b, c):
    tris[nt, 0] = a
    tris[nt, 1] = b
    tris[nt, 2] = c
    for e in range(3):
        if e == 0:
            u, v = a, b
        elif e == 1:
            u, v = b, c
        else:
            u, v = c, a
        key = min(u, v) * n + max(u, v)
        cnt = ecount.get(key, 0)
        if cnt == 0:
            efirst[key] = nt
            sega[ns] = min(u, v)
            segb[ns] = max(u, v)
            ns += 1
        ecount[key] = cnt + 1
    return nt + 1, ns


@numba.njit(cache=True)
def assemble(pts, cand, tol):
    """Accept consistent candidates, then close every open edge.

    Candidates (any vertex order) are taken greedily when they are CCW-able,
    contain no site and overlap nothing accepted so far. The rest of the
    triangle is filled by an advancing front that closes each open edge with
    the visible site subtending the largest angle.

    Returns ``(triangles, status)``; status 0 means a complete triangulation.
    """
    n = pts.shape[0]
    tris = np.empty((2 * n, 3), dtype=np.int64)
    nt = 0
    ecount = Dict.empty(key_type=types.int64, value_type=types.int64)
    efirst = Dict.empty(key_type=types.int64, value_type=types.int64)
    sega = np.empty(3 * n + 3, dtype=np.int64)
    segb = np.empty(3 * n + 3, dtype=np.int64)
    ns = 0

    for i in range(cand.shape[0]):
        a, b, c = cand[i, 0], cand[i, 1], cand[i, 2]
        if _orient(pts, a, b, c) < 0.0:
            b, c = c, b
        if nt < 2 * n - 5 and _can_add(pts, tris, ecount, efirst, sega, segb, ns, a, b, c, tol):
            nt, ns = _add(tris, nt, ecount, efirst, sega, segb, ns, n, a, b, c)

    cap = 8 * n + 8
    fa = np.empty(cap, dtype=np.int64)
    fb = np.empty(cap, dtype=np.int64)
    head = 0
    tail = 0
    for e in range(3):
        a, b = e, (e + 1) % 3
        if ecount.get(min(a, b) * n + max(a, b), 0) == 0:
            fa[tail] = a
            fb[tail] = b
            tail += 1
    for key, cnt in ecount.items():
        u = key // n
        v = key % n
        if cnt == 1 and not (u < 3 and v < 3):
            t = efirst[key]
            o = tris[t, 0] + tris[t, 1] + tris[t, 2] - u - v
            if _orient(pts, u, v, o) < 0.0:
                fa[tail] = u
                fb[tail] = v
            else:
                fa[tail] = v
                fb[tail] = u
            tail += 1

    while head < tail:
        a = fa[head]
        b = fb[head]
        head += 1
        hull = a < 3 and b < 3
        if ecount.get(min(a, b) * n + max(a, b), 0) != (0 if hull else 1):
            continue
        m = 0
        ids = np.empty(n, dtype=np.int64)
        cosang = np.empty(n)
        for s in range(n):
            if _orient(pts, a, b, s) > tol:
                ax = pts[a, 0] - pts[s, 0]
                ay = pts[a, 1] - pts[s, 1]
                bx = pts[b, 0] - pts[s, 0]
                by = pts[b, 1] - pts[s, 1]
                ids[m] = s
                cosang[m] = (ax * bx + ay * by) / (math.sqrt(ax * ax + ay * ay) * math.sqrt(bx * bx + by * by))
                m += 1
        if m == 0:
            return tris[:nt], NO_VISIBLE_SITE
        order = np.argsort(cosang[:m], kind="mergesort")
        placed = False
        for r in range(m):
            s = ids[order[r]]
            if nt < 2 * n - 5 and _can_add(pts, tris, ecount, efirst, sega, segb, ns, a, b, s, tol):
                nt, ns = _add(tris, nt, ecount, efirst, sega, segb, ns, n, a, b, s)
                for e in range(2):
                    if e == 0:
                        u, v = b, s
                    else:
                        u, v = s, a
                    if ecount[min(u, v) * n + max(u, v)] == 1 and not (u < 3 and v < 3):
                        if tail >= cap:
                            return tris[:nt], CANNOT_CLOSE
                        fa[tail] = v
                        fb[tail] = u
                        tail += 1
                placed = True
                break
        if not placed:
            return tris[:nt], CANNOT_CLOSE

    if nt != 2 * (n - 3) + 1:
        return tris[:nt], INCOMPLETE
    total = 0.0
    for t in range(nt):
        total += _orient(pts, tris[t, 0], tris[t, 1], tris[t, 2])
    if abs(total - TOTAL_ORIENT) > 1e-9:
        return tris[:nt], INCOMPLETE
    return tris[:nt], OK
