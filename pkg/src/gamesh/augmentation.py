"""Insert projected points into the prior's connectivity.

Every projected point is first moved strictly inside a single prior face (or,
when it sits on a prior vertex, takes that vertex's place). Each face is then
retriangulated on its own: one point splits the face into three, more points
go through a discrete Voronoi diagram computed on a grid laid over the face
after mapping it to an equilateral triangle. Grid windows that see three
distinct nearest sites mark Voronoi vertices, i.e. Delaunay triangles.

Triangles whose Voronoi vertex falls outside the grid (thin triangles along
the face boundary) cannot be seen this way; they are recovered with an exact
advancing-front pass that only fills the regions the grid left open.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import voronoi_grid as vg
from .mesh_core import AdjacencyMap, IndexedMesh
from .spatial_index import BARY_ZERO, Projection
from .voronoi_grid import EQUILATERAL

log = logging.getLogger(__name__)

MAX_GRID_CELLS = 4_000_000
MAX_REFINEMENTS = 3
COINCIDENT = 1e-12
DEFAULT_EPSILON = 1e-6
DEFAULT_SNAP = 1e-9  # relative to the prior's bbox diagonal


class TriangulationError(RuntimeError):
    pass


def default_grid_res(k: int) -> int:
    return max(64, math.ceil(8 * math.sqrt(k)) * 4)


@dataclass
class AugmentedMesh:
    mesh: IndexedMesh
    labels: np.ndarray  # 1 = prior vertex, 0 = projected point
    origin: np.ndarray  # input point index per vertex, -1 for label-1 vertices
    original: np.ndarray  # (n_points, 3) unprojected input points
    n_substituted: int = 0

    @property
    def projected_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)


@dataclass
class PlacedPoints:
    """Per-point placement after perturbation."""

    face: np.ndarray  # owning face, -1 for vertex substitutions
    bary: np.ndarray  # (n, 3), all components >= epsilon for face points
    substitutes: np.ndarray  # prior vertex replaced by this point, -1 otherwise


# ---------------------------------------------------------------- perturbation

def perturb_boundary_points(
    prior: IndexedMesh,
    projection: Projection,
    epsilon: float = DEFAULT_EPSILON,
    snap_tol: float | None = None,
    adjacency: AdjacencyMap | None = None,
) -> PlacedPoints:
    """Move edge/vertex footprints strictly inside one face.

    A footprint within ``snap_tol`` of a prior vertex takes that vertex's place
    instead (closest point wins, then lowest index); other footprints on an edge
    or vertex go to the lowest-index incident face, with barycentrics clamped to
    ``epsilon`` and renormalised.
    """
    if snap_tol is None:
        snap_tol = DEFAULT_SNAP * prior.bbox_diagonal()
    adj = adjacency or AdjacencyMap.build(prior)
    n = len(projection)
    faces = prior.faces
    face = projection.face.copy()
    bary = projection.bary.copy()
    substitutes = np.full(n, -1, dtype=np.int64)

    corner = np.argmax(bary, axis=1)
    nearest_vertex = faces[face, corner]
    gap = np.linalg.norm(projection.footprint - prior.vertices[nearest_vertex], axis=1)
    claims: dict[int, tuple[float, int]] = {}
    for i in np.flatnonzero(gap <= snap_tol).tolist():
        v = int(nearest_vertex[i])
        key = (float(gap[i]), i)
        if v not in claims or key < claims[v]:
            claims[v] = key
    for v, (_, i) in claims.items():
        substitutes[i] = v
        face[i] = -1

    for i in range(n):
        if substitutes[i] >= 0:
            continue
        b = bary[i]
        f = faces[face[i]]
        on = b >= BARY_ZERO
        if on.sum() == 1:
            v = int(f[np.argmax(b)])
            target = min(adj.vertex_faces[v])
            tb = np.where(faces[target] == v, 1.0, 0.0)
        elif on.sum() == 2:
            u, w = (int(x) for x in f[on])
            target = min(adj.edge_faces[(min(u, w), max(u, w))])
            tb = np.zeros(3)
            for slot, vid in enumerate(faces[target]):
                if vid == u:
                    tb[slot] = b[f == u][0]
                elif vid == w:
                    tb[slot] = b[f == w][0]
        else:
            target, tb = face[i], b
        if tb.min() < epsilon:
            tb = _clamp_bary(tb, epsilon)
        face[i] = target
        bary[i] = tb
    return PlacedPoints(face, bary, substitutes)


def _clamp_bary(b: np.ndarray, epsilon: float) -> np.ndarray:
    """Raise components below ``epsilon`` to it, shrinking the others to keep the sum at 1."""
    b = b.astype(np.float64).copy()
    low = np.zeros(3, dtype=bool)
    while True:
        low |= b < epsilon
        b[low] = epsilon
        rest = ~low
        b[rest] *= (1.0 - epsilon * low.sum()) / b[rest].sum()
        if not (b[rest] < epsilon).any():
            return b


# ------------------------------------------------------------- triangulation

def triangulate_face(bary_sites, grid_res: int | None = None) -> np.ndarray:
    """Triangulate a face with interior sites given in barycentric coordinates.

    Returns CCW triples over site ids ``0, 1, 2`` (the face corners) and
    ``3 .. 3+k-1`` (the interior sites, in the given order); always ``2k + 1``
    triangles.
    """
    sites = np.asarray(bary_sites, dtype=np.float64).reshape(-1, 3)
    k = len(sites)
    if k == 0:
        return np.array([[0, 1, 2]])
    if k == 1:
        return np.array([[0, 1, 3], [1, 2, 3], [2, 0, 3]])

    pts = np.concatenate([EQUILATERAL, sites @ EQUILATERAL])
    # coincident sites are triangulated once and spliced back afterwards
    tree = cKDTree(pts)
    rep = np.arange(len(pts))
    for i, j in sorted(tree.query_pairs(COINCIDENT)):
        ri, rj = rep[i], rep[j]
        rep[max(ri, rj)] = min(ri, rj)
    for i in range(len(pts)):
        rep[i] = rep[rep[i]]
    keep = np.flatnonzero(rep == np.arange(len(pts)))
    if len(keep) < len(pts):
        if (keep < 3).sum() < 3:
            raise TriangulationError("site coincides with a face corner")
        sub = triangulate_face(sites[keep[3:] - 3], grid_res)
        tris = [tuple(int(keep[x]) for x in t) for t in sub]
        for d in np.flatnonzero(rep != np.arange(len(pts))).tolist():
            s = int(rep[d])
            t = next(i for i, tri in enumerate(tris) if s in tri)
            tri = tris[t]
            r = tri.index(s)
            s, x, y = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]
            tris[t] = (x, y, d)
            tris += [(s, x, d), (y, s, d)]
        return np.array(tris, dtype=np.int64)

    res = grid_res or default_grid_res(k)
    nearest = tree.query(pts, k=2)[0][:, 1].min()
    for _ in range(MAX_REFINEMENTS):
        nx, ny = vg.grid_shape(2 * res)
        if nearest >= 1.0 / res or nx * ny > MAX_GRID_CELLS:
            break
        res *= 2

    tris, status = vg.assemble(pts, vg.grid_candidates(pts, res), vg.ORIENT_TOL)
    if status != vg.OK:
        log.debug("grid triangulation inconsistent for k=%d; exact fill from scratch", k)
        tris, status = vg.assemble(pts, np.zeros((0, 3), dtype=np.int64), vg.ORIENT_TOL)
        if status != vg.OK:
            raise TriangulationError(f"failed to triangulate face with {k} sites (status {status})")
    return tris


# ------------------------------------------------------------------ assembly

def augment(
    prior: IndexedMesh,
    projection: Projection,
    grid_res: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
    snap_tol: float | None = None,
) -> AugmentedMesh:
    """Build the labelled mesh holding both prior vertices and projected points.

    Vertex layout: prior vertices keep their indices; the projected point ``i``
    that does not replace a prior vertex becomes vertex ``n_prior + j`` where
    ``j`` counts such points in input order.
    """
    n_prior = prior.n_vertices
    placed = perturb_boundary_points(prior, projection, epsilon, snap_tol)
    n = len(projection)

    labels = np.ones(n_prior, dtype=np.int8)
    origin = np.full(n_prior, -1, dtype=np.int64)
    sub = np.flatnonzero(placed.substitutes >= 0)
    labels[placed.substitutes[sub]] = 0
    origin[placed.substitutes[sub]] = sub

    inserted = np.flatnonzero(placed.substitutes < 0)
    vid = np.full(n, -1, dtype=np.int64)
    vid[inserted] = n_prior + np.arange(len(inserted))
    vid[sub] = placed.substitutes[sub]

    fv = prior.faces
    new_pos = np.einsum("ij,ijk->ik", placed.bary[inserted], prior.vertices[fv[placed.face[inserted]]])
    vertices = np.concatenate([prior.vertices, new_pos])
    labels = np.concatenate([labels, np.zeros(len(inserted), dtype=np.int8)])
    origin = np.concatenate([origin, inserted])

    by_face: dict[int, list[int]] = defaultdict(list)
    for i in inserted.tolist():
        by_face[int(placed.face[i])].append(i)

    out_faces = []
    for f in range(prior.n_faces):
        pts = by_face.get(f)
        if not pts:
            out_faces.append(fv[f][None, :])
            continue
        # canonical site order keeps the result independent of input order
        pts.sort(key=lambda i: (tuple(placed.bary[i]), tuple(projection.original[i]), i))
        tris = triangulate_face(placed.bary[pts], grid_res)
        ids = np.concatenate([fv[f], vid[pts]])
        out_faces.append(ids[tris])
    faces = np.concatenate(out_faces) if out_faces else np.zeros((0, 3), dtype=np.int64)
    return AugmentedMesh(
        IndexedMesh(vertices, faces), labels, origin, projection.original.copy(), len(sub)
    )
