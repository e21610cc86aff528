"""Shared oracles and fixtures.

The oracles here are deliberately naive, independent re-derivations (dense
scans, O(n^2) distance matrices, textbook circumcircles) used to check the
optimised code paths.
"""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from gamesh import shapes
from gamesh.mesh_core import IndexedMesh

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ------------------------------------------------------------------ oracles

def closest_point_oracle(p, a, b, c):
    """Plane projection if it lands inside, else the best of the three edges."""
    p, a, b, c = (np.asarray(x, dtype=float) for x in (p, a, b, c))
    n = np.cross(b - a, c - a)
    nn = n @ n
    if nn > 0:
        q = p - ((p - a) @ n) / nn * n
        # barycentrics by sub-areas
        wa = np.cross(c - b, q - b) @ n / nn
        wb = np.cross(a - c, q - c) @ n / nn
        wc = 1.0 - wa - wb
        if min(wa, wb, wc) >= 0:
            return q
    best, best_d = None, np.inf
    for u, v in ((a, b), (b, c), (c, a)):
        e = v - u
        t = 0.0 if e @ e == 0 else float(np.clip((p - u) @ e / (e @ e), 0.0, 1.0))
        q = u + t * e
        d = (p - q) @ (p - q)
        if d < best_d:
            best, best_d = q, d
    return best


def mesh_distance_oracle(mesh: IndexedMesh, p) -> float:
    """Squared distance from ``p`` to the mesh by scanning every face."""
    best = np.inf
    for f in mesh.faces:
        q = closest_point_oracle(p, *mesh.vertices[f])
        best = min(best, float((p - q) @ (p - q)))
    return best


def circumcircle(a, b, c):
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    centre = np.array([ux, uy])
    return centre, float(np.linalg.norm(a - centre))


def empty_circumcircle_count(pts, tris, slack: float) -> int:
    """Triangles whose circumcircle, shrunk by ``slack``, holds no other site."""
    good = 0
    for t in tris:
        centre, R = circumcircle(*pts[t])
        others = np.delete(pts, t, axis=0)
        good += bool(np.linalg.norm(others - centre, axis=1).min() >= R - slack)
    return good


def is_covering_triangulation(pts, tris) -> bool:
    """CCW triangles tiling the corner triangle 0-1-2 with every site used."""
    tris = np.asarray(tris)
    k = len(pts) - 3
    if len(tris) != 2 * k + 1 or set(np.unique(tris).tolist()) != set(range(len(pts))):
        return False
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    if (area2 <= 0).any():
        return False
    o = pts[:3]
    total = (o[1, 0] - o[0, 0]) * (o[2, 1] - o[0, 1]) - (o[1, 1] - o[0, 1]) * (o[2, 0] - o[0, 0])
    if abs(area2.sum() - total) > 1e-9 * total:
        return False
    edges = Counter(tuple(sorted((int(t[i]), int(t[(i + 1) % 3])))) for t in tris for i in range(3))
    hull = {(0, 1), (1, 2), (0, 2)}
    return all(cnt == (1 if e in hull else 2) for e, cnt in edges.items()) and hull <= set(edges)


def brute_nearest_sq(src, dst):
    d = ((src[:, None, :] - dst[None, :, :]) ** 2).sum(-1)
    return d.min(axis=1)


def faces_up_to_relabel(faces, labels) -> set:
    """Face set with vertex ``i`` renamed ``labels[i]``, as sorted triples."""
    return {tuple(sorted(labels[list(f)].tolist())) for f in np.asarray(faces)}


# ----------------------------------------------------------------- fixtures

def surface_points(mesh: IndexedMesh, n: int, rng, scale=1.02, noise=0.0):
    from gamesh.metrics import sample_surface

    pts = sample_surface(mesh, n, int(rng.integers(1 << 31))).points * scale
    if noise:
        pts = pts + rng.normal(scale=noise * mesh.bbox_diagonal(), size=pts.shape)
    return pts


@pytest.fixture(scope="session")
def sphere():
    return shapes.icosphere(3)


@pytest.fixture(scope="session")
def torus():
    return shapes.torus(32, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
