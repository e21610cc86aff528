"""Exact closest-point queries against a triangle mesh.

A median-split AABB tree is built once per mesh; queries run a
branch-and-bound traversal in numba. Results are exact: a face is only pruned
when its box is strictly farther than the best distance found so far, and
equal distances resolve to the lowest face index, so the answer matches a
brute-force scan over all faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .mesh_core import IndexedMesh

INTERIOR, ON_EDGE, ON_VERTEX = 0, 1, 2
CLASS_NAMES = {INTERIOR: "interior", ON_EDGE: "on-edge", ON_VERTEX: "on-vertex"}
BARY_ZERO = 1e-9
LEAF_SIZE = 4


@numba.njit(cache=True)
def _segment(p, a, b):
    ab = b - a
    denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
    if denom <= 0.0:
        return 0.0
    t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1] + (p[2] - a[2]) * ab[2]) / denom
    if t < 0.0:
        return 0.0
    if t > 1.0:
        return 1.0
    return t


@numba.njit(cache=True)
def _closest_on_triangle(p, a, b, c, out_bary):
    """Closest point on the closed triangle abc; barycentrics written to out_bary.

    Region tests follow the Voronoi-region walk from Ericson's Real-Time
    Collision Detection. Degenerate triangles fall back to the longest edge.
    """
    ab = b - a
    ac = c - a
    n0 = ab[1] * ac[2] - ab[2] * ac[1]
    n1 = ab[2] * ac[0] - ab[0] * ac[2]
    n2 = ab[0] * ac[1] - ab[1] * ac[0]
    area2 = n0 * n0 + n1 * n1 + n2 * n2
    bc = c - b
    lab = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
    lac = ac[0] * ac[0] + ac[1] * ac[1] + ac[2] * ac[2]
    lbc = bc[0] * bc[0] + bc[1] * bc[1] + bc[2] * bc[2]
    longest = max(lab, lac, lbc)
    if area2 <= 1e-28 * longest * longest or longest == 0.0:
        if longest == lab:
            t = _segment(p, a, b)
            out_bary[0] = 1.0 - t
            out_bary[1] = t
            out_bary[2] = 0.0
        elif longest == lac:
            t = _segment(p, a, c)
            out_bary[0] = 1.0 - t
            out_bary[1] = 0.0
            out_bary[2] = t
        else:
            t = _segment(p, b, c)
            out_bary[0] = 0.0
            out_bary[1] = 1.0 - t
            out_bary[2] = t
        return out_bary[0] * a + out_bary[1] * b + out_bary[2] * c

    ap = p - a
    d1 = ab[0] * ap[0] + ab[1] * ap[1] + ab[2] * ap[2]
    d2 = ac[0] * ap[0] + ac[1] * ap[1] + ac[2] * ap[2]
    if d1 <= 0.0 and d2 <= 0.0:
        out_bary[0] = 1.0
        out_bary[1] = 0.0
        out_bary[2] = 0.0
        return a.copy()
    bp = p - b
    d3 = ab[0] * bp[0] + ab[1] * bp[1] + ab[2] * bp[2]
    d4 = ac[0] * bp[0] + ac[1] * bp[1] + ac[2] * bp[2]
    if d3 >= 0.0 and d4 <= d3:
        out_bary[0] = 0.0
        out_bary[1] = 1.0
        out_bary[2] = 0.0
        return b.copy()
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        out_bary[0] = 1.0 - v
        out_bary[1] = v
        out_bary[2] = 0.0
        return a + v * ab
    cp = p - c
    d5 = ab[0] * cp[0] + ab[1] * cp[1] + ab[2] * cp[2]
    d6 = ac[0] * cp[0] + ac[1] * cp[1] + ac[2] * cp[2]
    if d6 >= 0.0 and d5 <= d6:
        out_bary[0] = 0.0
        out_bary[1] = 0.0
        out_bary[2] = 1.0
        return c.copy()
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        out_bary[0] = 1.0 - w
        out_bary[1] = 0.0
        out_bary[2] = w
        return a + w * ac
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        out_bary[0] = 0.0
        out_bary[1] = 1.0 - w
        out_bary[2] = w
        return b + w * bc
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    out_bary[0] = 1.0 - v - w
    out_bary[1] = v
    out_bary[2] = w
    return a + ab * v + ac * w


@numba.njit(cache=True)
def _box_dist2(p, lo, hi):
    d = 0.0
    for k in range(3):
        if p[k] < lo[k]:
            t = lo[k] - p[k]
            d += t * t
        elif p[k] > hi[k]:
            t = p[k] - hi[k]
            d += t * t
    return d


@numba.njit(cache=True)
def _consider(p, verts, faces, f, best_d, best_f, best_pt, best_bary, bary):
    q = _closest_on_triangle(p, verts[faces[f, 0]], verts[faces[f, 1]], verts[faces[f, 2]], bary)
    d = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2
    if d < best_d or (d == best_d and f < best_f):
        best_pt[:] = q
        best_bary[:] = bary
        return d, f
    return best_d, best_f


@numba.njit(cache=True)
def _query_bvh(points, verts, faces, lo, hi, left, right, start, count, order,
               out_pt, out_bary, out_face, out_dist2):
    bary = np.empty(3)
    best_pt = np.empty(3)
    best_bary = np.empty(3)
    stack = np.empty(128, dtype=np.int64)
    for i in range(points.shape[0]):
        p = points[i]
        best_d = np.inf
        best_f = -1
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            if _box_dist2(p, lo[node], hi[node]) > best_d:
                continue
            if count[node] > 0:
                for k in range(start[node], start[node] + count[node]):
                    best_d, best_f = _consider(p, verts, faces, order[k], best_d, best_f,
                                               best_pt, best_bary, bary)
            else:
                l = left[node]
                r = right[node]
                dl = _box_dist2(p, lo[l], hi[l])
                dr = _box_dist2(p, lo[r], hi[r])
                # push the farther child first so the nearer one is popped next
                if dl <= dr:
                    stack[top] = r
                    stack[top + 1] = l
                else:
                    stack[top] = l
                    stack[top + 1] = r
                top += 2
        out_pt[i] = best_pt
        out_bary[i] = best_bary
        out_face[i] = best_f
        out_dist2[i] = best_d


@numba.njit(cache=True)
def _query_brute(points, verts, faces, out_pt, out_bary, out_face, out_dist2):
    bary = np.empty(3)
    best_pt = np.empty(3)
    best_bary = np.empty(3)
    for i in range(points.shape[0]):
        best_d = np.inf
        best_f = -1
        for f in range(faces.shape[0]):
            best_d, best_f = _consider(points[i], verts, faces, f, best_d, best_f,
                                       best_pt, best_bary, bary)
        out_pt[i] = best_pt
        out_bary[i] = best_bary
        out_face[i] = best_f
        out_dist2[i] = best_d


def classify(bary: np.ndarray) -> np.ndarray:
    """0 = interior, 1 = on an edge, 2 = on a vertex (per row of barycentrics)."""
    zeros = (np.asarray(bary) < BARY_ZERO).sum(axis=-1)
    return np.minimum(zeros, 2)


def closest_point_on_triangle(p, a, b, c) -> tuple[np.ndarray, np.ndarray, str]:
    bary = np.empty(3)
    q = _closest_on_triangle(*(np.asarray(x, dtype=np.float64) for x in (p, a, b, c)), bary)
    return q, bary, CLASS_NAMES[int(classify(bary))]


@dataclass(frozen=True)
class TriangleBVH:
    mesh: IndexedMesh
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray  # face ids grouped by leaf

    @property
    def n_nodes(self) -> int:
        return len(self.lo)

    def leaves(self) -> list[int]:
        return [i for i in range(self.n_nodes) if self.count[i] > 0]


def build(mesh: IndexedMesh, leaf_size: int = LEAF_SIZE) -> TriangleBVH:
    """Median split on the longest axis of the face-centroid box."""
    if mesh.n_faces == 0:
        raise ValueError("no faces")
    tri = mesh.vertices[mesh.faces]
    fmin, fmax = tri.min(axis=1), tri.max(axis=1)
    cent = tri.mean(axis=1)
    pad = 1e-12 * max(mesh.bbox_diagonal(), 1e-300)

    order = np.arange(mesh.n_faces)
    lo, hi, left, right, start, count = [], [], [], [], [], []

    def new_node(s, e):
        ids = order[s:e]
        lo.append(fmin[ids].min(axis=0) - pad)
        hi.append(fmax[ids].max(axis=0) + pad)
        left.append(-1)
        right.append(-1)
        start.append(s)
        count.append(e - s)
        return len(lo) - 1

    stack = [(new_node(0, mesh.n_faces), 0, mesh.n_faces)]
    while stack:
        node, s, e = stack.pop()
        if e - s <= leaf_size:
            continue
        ids = order[s:e]
        c = cent[ids]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        # stable sort keeps the layout a pure function of the mesh
        order[s:e] = ids[np.argsort(c[:, axis], kind="stable")]
        m = (s + e) // 2
        l_node, r_node = new_node(s, m), new_node(m, e)
        left[node], right[node], count[node] = l_node, r_node, 0
        stack.append((r_node, m, e))
        stack.append((l_node, s, m))

    return TriangleBVH(
        mesh,
        np.array(lo),
        np.array(hi),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(start, dtype=np.int64),
        np.array(count, dtype=np.int64),
        order.astype(np.int64),
    )


@dataclass(frozen=True)
class ProjectedPoint:
    original: np.ndarray
    footprint: np.ndarray
    face: int
    bary: np.ndarray
    classification: str


@dataclass
class Projection:
    """Struct-of-arrays result of projecting a point list onto a mesh."""

    original: np.ndarray  # (n, 3)
    footprint: np.ndarray  # (n, 3)
    face: np.ndarray  # (n,)
    bary: np.ndarray  # (n, 3)
    dist2: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.original)

    def __getitem__(self, i: int) -> ProjectedPoint:
        return ProjectedPoint(
            self.original[i], self.footprint[i], int(self.face[i]), self.bary[i],
            CLASS_NAMES[int(classify(self.bary[i]))],
        )

    @property
    def classification(self) -> np.ndarray:
        return classify(self.bary)


def _alloc(n):
    return np.empty((n, 3)), np.empty((n, 3)), np.empty(n, dtype=np.int64), np.empty(n)


def project(bvh: TriangleBVH, points) -> Projection:
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    pt, bary, face, d2 = _alloc(len(pts))
    m = bvh.mesh
    _query_bvh(pts, m.vertices, m.faces, bvh.lo, bvh.hi, bvh.left, bvh.right,
               bvh.start, bvh.count, bvh.order, pt, bary, face, d2)
    return Projection(pts, pt, face, bary, d2)


def project_brute_force(mesh: IndexedMesh, points) -> Projection:
    """All-faces scan; the reference the tree query must agree with."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    pt, bary, face, d2 = _alloc(len(pts))
    _query_brute(pts, mesh.vertices, mesh.faces, pt, bary, face, d2)
    return Projection(pts, pt, face, bary, d2)
