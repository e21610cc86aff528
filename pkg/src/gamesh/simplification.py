"""Guided edge-collapse simplification and quadric decimation.

The guided pass removes every prior vertex (label 1) from an augmented mesh
so that only projected points (label 0) remain. Edges are collapsed cheapest
first under ``exp(l1 + l2) * |v1 - v2|**2``; collapses that would flip or
pinch the surface are deferred and, if they never become valid, forced at the
end.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .augmentation import AugmentedMesh
from .mesh_core import IndexedMesh, remove_duplicate_faces

log = logging.getLogger(__name__)

DEFER_FACTOR = 2.0
MAX_DEFERRALS = 10
DEGENERATE_AREA = 1e-12  # relative to bbox diagonal squared


def collapse_cost(v1, v2, l1: int, l2: int) -> float:
    if l1 == 0 and l2 == 0:
        raise ValueError("uncollapsible edge")
    d = np.asarray(v1, dtype=np.float64) - np.asarray(v2, dtype=np.float64)
    return math.exp(l1 + l2) * float(d @ d)


class CollapseMesh:
    """Mutable face-set mesh supporting vertex-merge collapses.

    Faces that lose a vertex to the merge vanish; faces that become copies of
    a live face are dropped, so the face set never holds duplicates.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        self.pos = np.array(vertices, dtype=np.float64)
        self.faces: list[list[int]] = [list(map(int, f)) for f in faces]
        self.face_alive = [True] * len(self.faces)
        self.vertex_alive = np.ones(len(self.pos), dtype=bool)
        self.version = np.zeros(len(self.pos), dtype=np.int64)
        self.vf: list[set[int]] = [set() for _ in range(len(self.pos))]
        self.keys: dict[tuple[int, ...], int] = {}
        for fi, f in enumerate(self.faces):
            key = tuple(sorted(f))
            if len(set(f)) < 3 or key in self.keys:
                self.face_alive[fi] = False
                continue
            self.keys[key] = fi
            for v in f:
                self.vf[v].add(fi)
        diag = float(np.linalg.norm(np.ptp(self.pos, axis=0))) if len(self.pos) else 0.0
        self.min_area = DEGENERATE_AREA * diag * diag

    def neighbors(self, v: int) -> set[int]:
        out: set[int] = set()
        for f in self.vf[v]:
            out.update(self.faces[f])
        out.discard(v)
        return out

    def has_edge(self, a: int, b: int) -> bool:
        return any(b in self.faces[f] for f in self.vf[a])

    def edge_faces(self, a: int, b: int) -> list[int]:
        return [f for f in self.vf[a] if b in self.faces[f]]

    def is_boundary_vertex(self, v: int) -> bool:
        count: dict[int, int] = {}
        for f in self.vf[v]:
            for u in self.faces[f]:
                if u != v:
                    count[u] = count.get(u, 0) + 1
        return any(c == 1 for c in count.values())

    def link_ok(self, a: int, b: int) -> bool:
        """Collapsing ab keeps the neighbourhood a disk (manifold link condition)."""
        ef = self.edge_faces(a, b)
        opposite = {next(x for x in self.faces[f] if x != a and x != b) for f in ef}
        if self.neighbors(a) & self.neighbors(b) != opposite:
            return False
        # an edge cd shared by both links: faces acd and bcd would fold together
        opp = sorted(opposite)
        for i, c in enumerate(opp):
            for d in opp[i + 1:]:
                if (tuple(sorted((a, c, d))) in self.keys
                        and tuple(sorted((b, c, d))) in self.keys):
                    return False
        if len(ef) == 2 and self.is_boundary_vertex(a) and self.is_boundary_vertex(b):
            return False
        return True

    def would_flip(self, a: int, b: int, p) -> bool:
        """True if moving a and b to p reverses or degenerates a surviving face."""
        surviving = self.vf[a] ^ self.vf[b]
        if not surviving:
            return False
        idx = np.array([self.faces[f] for f in surviving], dtype=np.int64)
        return _flips(self.pos, idx, a, b, np.asarray(p, dtype=np.float64), self.min_area)

    def collapse(self, remove: int, keep: int, p) -> None:
        for f in list(self.vf[remove]):
            face = self.faces[f]
            self._unlink(f)
            if keep in face:
                self.face_alive[f] = False
                continue
            face[face.index(remove)] = keep
            key = tuple(sorted(face))
            if key in self.keys:
                self.face_alive[f] = False
                continue
            self.keys[key] = f
            for v in face:
                self.vf[v].add(f)
        self.pos[keep] = p
        self.vertex_alive[remove] = False
        self.version[keep] += 1
        self.version[remove] += 1

    def _unlink(self, f: int) -> None:
        face = self.faces[f]
        self.keys.pop(tuple(sorted(face)), None)
        for v in face:
            self.vf[v].discard(f)

    def live_faces(self) -> np.ndarray:
        out = [f for f, alive in zip(self.faces, self.face_alive) if alive]
        return np.array(out, dtype=np.int64).reshape(-1, 3)


@numba.njit(cache=True)
def _flips(pos, idx, a, b, p, min_area):
    for i in range(idx.shape[0]):
        t0 = np.empty((3, 3))
        t1 = np.empty((3, 3))
        for c in range(3):
            t0[c] = pos[idx[i, c]]
            if idx[i, c] == a or idx[i, c] == b:
                t1[c] = p
            else:
                t1[c] = t0[c]
        n0 = np.cross(t0[1] - t0[0], t0[2] - t0[0])
        n1 = np.cross(t1[1] - t1[0], t1[2] - t1[0])
        area0 = 0.5 * np.sqrt(n0 @ n0)
        area1 = 0.5 * np.sqrt(n1 @ n1)
        if area0 > min_area and (n0 @ n1 < 0.0 or area1 <= min_area):
            return True
    return False


# ------------------------------------------------------------ guided collapse

@dataclass
class CollapseLog:
    steps: list[tuple[int, int, str, bool]] = field(default_factory=list)
    deferred: int = 0
    forced: int = 0
    dropped: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "collapses": len(self.steps),
            "deferred": self.deferred,
            "forced": self.forced,
            "dropped_isolated": len(self.dropped),
        }


def _plan(state: CollapseMesh, labels: np.ndarray, u: int, v: int):
    """(remove, keep, position, placement) for the edge uv."""
    if labels[u] == 1 and labels[v] == 1:
        keep, remove = min(u, v), max(u, v)
        return remove, keep, 0.5 * (state.pos[u] + state.pos[v]), "midpoint"
    if labels[u] == 1:
        return u, v, state.pos[v].copy(), "keep-projected"
    return v, u, state.pos[u].copy(), "keep-projected"


def _apply(state: CollapseMesh, labels: np.ndarray, u: int, v: int):
    remove, keep, p, placement = _plan(state, labels, u, v)
    state.collapse(remove, keep, p)
    return keep, placement


def _push_edges(heap, state: CollapseMesh, labels: np.ndarray, v: int, tries: int = 0) -> None:
    for w in state.neighbors(v):
        if labels[v] == 0 and labels[w] == 0:
            continue
        a, b = (v, w) if v < w else (w, v)
        cost = collapse_cost(state.pos[a], state.pos[b], labels[a], labels[b])
        heapq.heappush(heap, (cost, a, b, state.version[a], state.version[b], tries))


def _valid_entry(state: CollapseMesh, a: int, b: int, va: int, vb: int) -> bool:
    return (state.vertex_alive[a] and state.vertex_alive[b]
            and state.version[a] == va and state.version[b] == vb
            and state.has_edge(a, b))


def simplify(aug: AugmentedMesh) -> tuple[IndexedMesh, CollapseLog]:
    """Collapse away every label-1 vertex.

    Returns a mesh whose vertex ``i`` is input point ``i`` at its projected
    position (call :func:`unproject` afterwards) and the collapse log.
    """
    state = CollapseMesh(aug.mesh.vertices, aug.mesh.faces)
    labels = aug.labels.astype(np.int8).copy()
    record = CollapseLog()
    # edges out of retries wait here until a collapse touches their endpoints
    parked: dict[int, list[tuple[int, int]]] = {}

    heap: list = []
    for v in np.flatnonzero(labels == 1).tolist():
        _push_edges(heap, state, labels, v)
    heapq.heapify(heap)

    while heap:
        cost, a, b, va, vb, tries = heapq.heappop(heap)
        if not _valid_entry(state, a, b, va, vb):
            continue
        _, _, p, _ = _plan(state, labels, a, b)
        if state.would_flip(a, b, p) or not state.link_ok(a, b):
            record.deferred += 1
            if tries + 1 < MAX_DEFERRALS:
                heapq.heappush(heap, (cost * DEFER_FACTOR, a, b, va, vb, tries + 1))
            else:
                parked.setdefault(a, []).append((a, b))
                parked.setdefault(b, []).append((a, b))
            continue
        keep, placement = _apply(state, labels, a, b)
        record.steps.append((a, b, placement, False))
        _push_edges(heap, state, labels, keep)
        for w in state.neighbors(keep):
            for x, y in parked.pop(w, ()):
                if state.vertex_alive[x] and state.vertex_alive[y]:
                    # one more look per neighbourhood change
                    cost = collapse_cost(state.pos[x], state.pos[y], labels[x], labels[y])
                    heapq.heappush(heap, (cost, x, y, state.version[x], state.version[y],
                                          MAX_DEFERRALS - 1))

    remaining = [v for v in np.flatnonzero(labels == 1).tolist() if state.vertex_alive[v]]
    if remaining:
        _force(state, labels, remaining, record)

    for v in np.flatnonzero(labels == 1).tolist():
        if state.vertex_alive[v]:
            log.warning("dropping isolated prior vertex %d", v)
            record.dropped.append(v)
            state.vertex_alive[v] = False

    return _extract(state, aug), record


def _force(state: CollapseMesh, labels: np.ndarray, remaining: list[int], record: CollapseLog):
    """Remove the leftover prior vertices whatever the flips.

    Entries carry a tier: 0 valid, 1 flips a face, 2 breaks the link
    condition. A popped entry whose current tier is worse than its key is
    pushed back at the worse tier, so a flipping collapse is only forced when
    no valid one is left, and link-breaking ones come last.
    """
    heap: list = []

    def push(v):
        for w in state.neighbors(v):
            if labels[v] == 0 and labels[w] == 0:
                continue
            a, b = (v, w) if v < w else (w, v)
            cost = collapse_cost(state.pos[a], state.pos[b], labels[a], labels[b])
            heapq.heappush(heap, (0, cost, a, b, state.version[a], state.version[b]))

    for v in remaining:
        push(v)
    while heap:
        tier, cost, a, b, va, vb = heapq.heappop(heap)
        if not _valid_entry(state, a, b, va, vb):
            continue
        _, _, p, _ = _plan(state, labels, a, b)
        if not state.link_ok(a, b):
            now = 2
        elif state.would_flip(a, b, p):
            now = 1
        else:
            now = 0
        if now > tier:
            heapq.heappush(heap, (now, cost, a, b, va, vb))
            continue
        keep, placement = _apply(state, labels, a, b)
        record.steps.append((a, b, placement, now > 0))
        record.forced += int(now > 0)
        push(keep)
        # neighbours pushed to a worse tier may have become valid
        for w in state.neighbors(keep):
            if labels[w] == 1:
                push(w)
    if record.forced:
        log.info("forced %d collapses past flip/link checks", record.forced)


def _extract(state: CollapseMesh, aug: AugmentedMesh) -> IndexedMesh:
    n_points = len(aug.original)
    keep = np.flatnonzero(aug.labels == 0)
    remap = np.full(len(state.pos), -1, dtype=np.int64)
    remap[keep] = aug.origin[keep]
    faces = state.live_faces()
    if len(faces):
        faces = remap[faces]
        if (faces < 0).any():
            raise RuntimeError("face references a removed vertex")
    faces = remove_duplicate_faces(faces)
    vertices = np.empty((n_points, 3))
    vertices[aug.origin[keep]] = state.pos[keep]
    return IndexedMesh(vertices, faces)


def replay(aug: AugmentedMesh, record: CollapseLog) -> IndexedMesh:
    """Re-run a collapse log on the augmented mesh it was recorded from."""
    state = CollapseMesh(aug.mesh.vertices, aug.mesh.faces)
    labels = aug.labels.astype(np.int8).copy()
    for a, b, _, _ in record.steps:
        _apply(state, labels, a, b)
    for v in record.dropped:
        state.vertex_alive[v] = False
    return _extract(state, aug)


def unproject(mesh: IndexedMesh, origins) -> IndexedMesh:
    """Move every vertex back to its unprojected input position."""
    original = getattr(origins, "original", origins)
    original = np.asarray(original, dtype=np.float64).reshape(-1, 3)
    if len(original) != mesh.n_vertices:
        raise ValueError("one origin per vertex required")
    return IndexedMesh(original, mesh.faces)


# ----------------------------------------------------------------- quadrics

def _face_planes(pos: np.ndarray, faces: np.ndarray) -> np.ndarray:
    tri = pos[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)
    d = -np.einsum("ij,ij->i", n, tri[:, 0])
    return np.concatenate([n, d[:, None]], axis=1)


def _vertex_quadrics(state: CollapseMesh) -> np.ndarray:
    faces = state.live_faces()
    Q = np.zeros((len(state.pos), 4, 4))
    if len(faces) == 0:
        return Q
    planes = _face_planes(state.pos, faces)
    K = np.einsum("ij,ik->ijk", planes, planes)
    for c in range(3):
        np.add.at(Q, faces[:, c], K)
    # boundary edges get a perpendicular constraint plane
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    owner = np.tile(np.arange(len(faces)), 3)
    key = np.sort(edges, axis=1)
    _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    border = cnt[inv.ravel()] == 1
    for (a, b), f in zip(edges[border], owner[border]):
        e = state.pos[b] - state.pos[a]
        n = np.cross(e, planes[f, :3])
        norm = np.linalg.norm(n)
        if norm == 0:
            continue
        n /= norm
        pl = np.append(n, -n @ state.pos[a])
        Kb = np.outer(pl, pl) * (e @ e)
        Q[a] += Kb
        Q[b] += Kb
    return Q


@numba.njit(cache=True)
def _qem_eval(Q, x, y, z):
    return (Q[0, 0] * x * x + Q[1, 1] * y * y + Q[2, 2] * z * z + Q[3, 3]
            + 2.0 * (Q[0, 1] * x * y + Q[0, 2] * x * z + Q[1, 2] * y * z
                     + Q[0, 3] * x + Q[1, 3] * y + Q[2, 3] * z))


@numba.njit(cache=True)
def _qem_target(Q, pa, pb):
    """Error-minimising position, falling back to the endpoints and midpoint."""
    cand = np.empty((4, 3))
    m = 0
    A = Q[:3, :3]
    if abs(np.linalg.det(A)) > 1e-12:
        cand[0] = np.linalg.solve(A, -Q[:3, 3])
        m = 1
    cand[m] = pa
    cand[m + 1] = pb
    cand[m + 2] = 0.5 * (pa + pb)
    m += 3
    best = np.inf
    arg = 0
    for i in range(m):
        err = _qem_eval(Q, cand[i, 0], cand[i, 1], cand[i, 2])
        if err < best - 1e-15:
            best = err
            arg = i
    return max(best, 0.0), cand[arg].copy()


def simplify_quadric(mesh: IndexedMesh, target_vertices: int) -> IndexedMesh:
    """Garland-Heckbert decimation down to ``target_vertices`` referenced vertices.

    Collapses that flip a face or break the link condition are skipped, so
    topology is kept; if the target is unreachable the mesh is returned at
    the smallest count reached.
    """
    if target_vertices < 4:
        raise ValueError("target_vertices must be >= 4")
    state = CollapseMesh(mesh.vertices, mesh.faces)
    alive = {v for f in state.live_faces().tolist() for v in f}
    if len(alive) <= target_vertices:
        return IndexedMesh(mesh.vertices, remove_duplicate_faces(mesh.faces))
    state.vertex_alive[:] = False
    state.vertex_alive[list(alive)] = True
    Q = _vertex_quadrics(state)

    def push(v, only_higher=False):
        for w in state.neighbors(v):
            if only_higher and w < v:
                continue
            a, b = (v, w) if v < w else (w, v)
            err, p = _qem_target(Q[a] + Q[b], state.pos[a], state.pos[b])
            heapq.heappush(heap, (err, a, b, state.version[a], state.version[b], tuple(p)))

    heap: list = []
    for v in sorted(alive):
        push(v, only_higher=True)
    count = len(alive)
    while heap and count > target_vertices:
        err, a, b, va, vb, p = heapq.heappop(heap)
        if not _valid_entry(state, a, b, va, vb):
            continue
        if not state.link_ok(a, b) or state.would_flip(a, b, p):
            continue
        if len(state.neighbors(a) | state.neighbors(b)) <= 3:
            # would shrink a closed component below a tetrahedron
            continue
        state.collapse(b, a, np.array(p))
        Q[a] = Q[a] + Q[b]
        count -= 1
        push(a)
    if count > target_vertices:
        log.warning("quadric decimation stopped at %d vertices (target %d)", count, target_vertices)

    faces = state.live_faces()
    used = np.unique(faces)
    remap = np.full(len(state.pos), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return IndexedMesh(state.pos[used], remap[faces])
