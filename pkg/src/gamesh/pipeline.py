"""End-to-end meshing: project, augment, simplify, unproject."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import augmentation, simplification, spatial_index
from .mesh_core import IndexedMesh, TopologySummary, topology_summary
from .simplification import CollapseLog


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass
class MeshingResult:
    mesh: IndexedMesh
    log: CollapseLog
    timings: dict[str, float] = field(default_factory=dict)
    n_substituted: int = 0
    augmented: augmentation.AugmentedMesh | None = None


def gamesh(
    prior: IndexedMesh,
    points,
    grid_res: int | None = None,
    epsilon: float = augmentation.DEFAULT_EPSILON,
    snap_tol: float | None = None,
    bvh: spatial_index.TriangleBVH | None = None,
    keep_augmented: bool = False,
) -> MeshingResult:
    """Mesh ``points`` with the connectivity of ``prior``.

    Output vertex ``i`` is ``points[i]`` exactly.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise StageError("input", ValueError("no points"))
    timings: dict[str, float] = {}

    def stage(name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except Exception as exc:  # re-raised with the stage tag
            raise StageError(name, exc) from exc
        finally:
            timings[name] = time.perf_counter() - t0

    if bvh is None:
        bvh = stage("index", spatial_index.build, prior)
    proj = stage("project", spatial_index.project, bvh, points)
    aug = stage("augment", augmentation.augment, prior, proj, grid_res, epsilon, snap_tol)
    mesh, record = stage("simplify", simplification.simplify, aug)
    out = stage("unproject", simplification.unproject, mesh, points)
    return MeshingResult(out, record, timings, aug.n_substituted, aug if keep_augmented else None)


def topology(mesh: IndexedMesh) -> TopologySummary:
    return topology_summary(mesh)
