"""Indexed triangle meshes, adjacency and topology bookkeeping.

Meshes are plain indexed face sets so that non-manifold input (edges shared by
more than two faces, pinched vertices) is representable without special cases.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IndexedMesh:
    vertices: np.ndarray  # (n_vertices, 3) float64
    faces: np.ndarray  # (n_faces, 3) int64, 0-based

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64).reshape(-1, 3))
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def bbox_diagonal(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def face_set(self) -> set[tuple[int, int, int]]:
        """Faces as unordered vertex triples."""
        return {tuple(sorted(map(int, f))) for f in self.faces}

    def referenced_vertices(self) -> np.ndarray:
        return np.unique(self.faces)

    def copy_with(self, vertices=None, faces=None) -> "IndexedMesh":
        return IndexedMesh(
            self.vertices if vertices is None else vertices,
            self.faces if faces is None else faces,
        )


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class AdjacencyMap:
    vertex_faces: dict[int, list[int]]
    edge_faces: dict[tuple[int, int], list[int]]
    vertex_neighbors: dict[int, set[int]]

    @classmethod
    def build(cls, mesh: IndexedMesh) -> "AdjacencyMap":
        vertex_faces: dict[int, list[int]] = defaultdict(list)
        edge_faces: dict[tuple[int, int], list[int]] = defaultdict(list)
        vertex_neighbors: dict[int, set[int]] = defaultdict(set)
        for fi, (a, b, c) in enumerate(mesh.faces.tolist()):
            for v in {a, b, c}:
                vertex_faces[v].append(fi)
            for u, w in ((a, b), (b, c), (c, a)):
                if u == w:
                    continue
                edge_faces[_edge_key(u, w)].append(fi)
                vertex_neighbors[u].add(w)
                vertex_neighbors[w].add(u)
        return cls(dict(vertex_faces), dict(edge_faces), dict(vertex_neighbors))

    def boundary_edges(self) -> list[tuple[int, int]]:
        return sorted(e for e, fs in self.edge_faces.items() if len(fs) == 1)

    def non_manifold_edges(self) -> list[tuple[int, int]]:
        return sorted(e for e, fs in self.edge_faces.items() if len(fs) > 2)


@dataclass
class ValidationReport:
    out_of_range_faces: list[int] = field(default_factory=list)
    repeated_index_faces: list[int] = field(default_factory=list)
    duplicate_faces: list[int] = field(default_factory=list)
    degenerate_faces: list[int] = field(default_factory=list)
    non_manifold_edges: list[tuple[int, int]] = field(default_factory=list)
    boundary_edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        """True when there are no defects; boundary edges are not defects."""
        return not (
            self.out_of_range_faces
            or self.repeated_index_faces
            or self.duplicate_faces
            or self.degenerate_faces
            or self.non_manifold_edges
        )


def face_geometry(mesh: IndexedMesh, face: int) -> tuple[np.ndarray, float, bool]:
    """Return ``(unit_normal, area, degenerate)`` for one face.

    Degenerate faces get a zero normal and ``degenerate=True``.
    """
    a, b, c = mesh.vertices[mesh.faces[face]]
    cross = np.cross(b - a, c - a)
    norm = float(np.linalg.norm(cross))
    scale = max(
        float(np.dot(b - a, b - a)), float(np.dot(c - a, c - a)), float(np.dot(c - b, c - b))
    )
    if norm == 0.0 or norm <= 1e-14 * scale:
        return np.zeros(3), 0.5 * norm, True
    return cross / norm, 0.5 * norm, False


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    if len(faces) == 0:
        return np.zeros(0)
    tri = vertices[faces]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def validate(mesh: IndexedMesh) -> ValidationReport:
    report = ValidationReport()
    nv = mesh.n_vertices
    seen: dict[tuple[int, ...], int] = {}
    good = []
    for fi, f in enumerate(mesh.faces.tolist()):
        if min(f) < 0 or max(f) >= nv:
            report.out_of_range_faces.append(fi)
            continue
        if len(set(f)) < 3:
            report.repeated_index_faces.append(fi)
            continue
        key = tuple(sorted(f))
        if key in seen:
            report.duplicate_faces.append(fi)
        else:
            seen[key] = fi
        good.append(fi)

    if good:
        sub = IndexedMesh(mesh.vertices, mesh.faces[good])
        for local, fi in enumerate(good):
            if face_geometry(sub, local)[2]:
                report.degenerate_faces.append(fi)
        adj = AdjacencyMap.build(sub)
        report.non_manifold_edges = adj.non_manifold_edges()
        report.boundary_edges = adj.boundary_edges()
    return report


@dataclass(frozen=True)
class TopologySummary:
    n_vertices: int
    n_edges: int
    n_faces: int
    euler: int
    n_components: int
    n_boundary_edges: int
    n_non_manifold_edges: int
    genus: int | None

    @property
    def manifold_closed(self) -> bool:
        return self.n_boundary_edges == 0 and self.n_non_manifold_edges == 0

    def as_dict(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "faces": self.n_faces,
            "euler": self.euler,
            "components": self.n_components,
            "boundary_edges": self.n_boundary_edges,
            "non_manifold_edges": self.n_non_manifold_edges,
            "genus": self.genus,
        }


def _count_components(n: int, edges: np.ndarray) -> tuple[int, np.ndarray]:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    if len(edges) == 0:
        return n, np.arange(n)
    graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(graph, directed=False)


def topology_summary(mesh: IndexedMesh, count_isolated: bool = False) -> TopologySummary:
    """Counts, Euler characteristic and (when defined) genus.

    Vertices are the face-referenced ones unless ``count_isolated`` is set, so
    that stray unreferenced vertices do not shift the Euler characteristic.
    Genus is reported only for closed manifold meshes whose components all
    have even Euler characteristic; it is summed over components.
    """
    adj = AdjacencyMap.build(mesh)
    if count_isolated:
        used = np.arange(mesh.n_vertices)
    else:
        used = mesh.referenced_vertices()
    edges = np.array(sorted(adj.edge_faces), dtype=np.int64).reshape(-1, 2)
    V, E, F = len(used), len(edges), mesh.n_faces
    chi = V - E + F

    n_comp, labels = _count_components(mesh.n_vertices, edges)
    if not count_isolated:
        # isolated vertices form their own components; drop them
        n_comp = len(np.unique(labels[used])) if len(used) else 0

    n_boundary = len(adj.boundary_edges())
    n_nm = len(adj.non_manifold_edges())
    genus = None
    if n_boundary == 0 and n_nm == 0 and F > 0:
        comp_chi: dict[int, int] = defaultdict(int)
        for v in used.tolist():
            comp_chi[int(labels[v])] += 1
        for a, b in edges.tolist():
            comp_chi[int(labels[a])] -= 1
        for f in mesh.faces.tolist():
            comp_chi[int(labels[f[0]])] += 1
        if all(x % 2 == 0 and x <= 2 for x in comp_chi.values()):
            genus = sum((2 - x) // 2 for x in comp_chi.values())
    return TopologySummary(V, E, F, chi, int(n_comp), n_boundary, n_nm, genus)


def remove_duplicate_faces(faces: np.ndarray) -> np.ndarray:
    """Drop faces with repeated indices and all but the first copy of a triple."""
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        return faces
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    faces = faces[ok]
    _, first = np.unique(np.sort(faces, axis=1), axis=0, return_index=True)
    return faces[np.sort(first)]
