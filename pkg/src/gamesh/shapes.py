"""Procedural meshes with known topology, used as priors in tests and demos."""

from __future__ import annotations

import numpy as np

from .mesh_core import IndexedMesh


def tetrahedron() -> IndexedMesh:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return IndexedMesh(v, f)


def grid_square(n: int = 4, size: float = 1.0) -> IndexedMesh:
    """Flat ``n x n`` quad grid in the z=0 plane, each quad split in two."""
    xs = np.linspace(0.0, size, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    v = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    f = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return IndexedMesh(v, f)


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> IndexedMesh:
    t = (1.0 + 5 ** 0.5) / 2.0
    v = [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in v]
    faces = f
    for _ in range(subdivisions):
        mid: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mid:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                mid[key] = len(verts) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return IndexedMesh(np.array(verts) * radius, np.array(faces))


def torus(n_major: int = 32, n_minor: int = 16, R: float = 1.0, r: float = 0.4) -> IndexedMesh:
    u = np.arange(n_major) * 2 * np.pi / n_major
    w = np.arange(n_minor) * 2 * np.pi / n_minor
    U, W = np.meshgrid(u, w, indexing="ij")
    x = (R + r * np.cos(W)) * np.cos(U)
    y = (R + r * np.cos(W)) * np.sin(U)
    z = r * np.sin(W)
    v = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i * n_minor + j
    b = ((i + 1) % n_major) * n_minor + j
    c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
    d = i * n_minor + (j + 1) % n_minor
    f = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return IndexedMesh(v, f)


def voxel_surface(occupied: np.ndarray, subdivisions: int = 1) -> IndexedMesh:
    """Closed boundary surface of a union of unit voxels.

    Each exposed unit square is split into ``subdivisions**2`` quads (two
    triangles each), outward oriented. Voxels touching only along an edge or a
    corner give non-manifold output; callers pick configurations without that.
    """
    occ = np.pad(np.asarray(occupied, dtype=bool), 1)
    n = subdivisions
    index: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[int, int, int]] = []
    faces: list[tuple[int, int, int]] = []

    def vid(p):
        if p not in index:
            index[p] = len(verts)
            verts.append(p)
        return index[p]

    # (axis, sign): square spanned by the two other axes, wound outward
    for x, y, z in zip(*np.nonzero(occ)):
        for axis in range(3):
            for sign in (-1, 1):
                nb = [x, y, z]
                nb[axis] += sign
                if occ[tuple(nb)]:
                    continue
                u_ax, v_ax = [(1, 2), (2, 0), (0, 1)][axis]
                if sign < 0:
                    u_ax, v_ax = v_ax, u_ax
                base = [x * n, y * n, z * n]
                if sign > 0:
                    base[axis] += n
                for i in range(n):
                    for j in range(n):
                        corners = []
                        for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                            p = list(base)
                            p[u_ax] += i + di
                            p[v_ax] += j + dj
                            corners.append(vid(tuple(p)))
                        a, b, c, d = corners
                        faces.append((a, b, c))
                        faces.append((a, c, d))
    v = (np.array(verts, dtype=float) - n) / n
    return IndexedMesh(v, np.array(faces))


def double_torus(subdivisions: int = 4) -> IndexedMesh:
    """Genus-2 plate: a 5x3x1 voxel slab with two square holes."""
    occ = np.ones((5, 3, 1), dtype=bool)
    occ[1, 1, 0] = False
    occ[3, 1, 0] = False
    return voxel_surface(occ, subdivisions)


def cube(subdivisions: int = 1) -> IndexedMesh:
    return voxel_surface(np.ones((1, 1, 1), dtype=bool), subdivisions)


def normalize(mesh: IndexedMesh, diagonal: float = 1.0) -> IndexedMesh:
    """Centre the bounding box at the origin and scale its diagonal to ``diagonal``."""
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    v = (mesh.vertices - 0.5 * (lo + hi)) * (diagonal / np.linalg.norm(hi - lo))
    return IndexedMesh(v, mesh.faces)
