"""Surface sampling and point-cloud metrics used to score reconstructions.

Conventions:
  * distances are squared Euclidean throughout, including the F1 threshold;
  * Chamfer is the sum of the two directed means of squared nearest distances;
  * F1 precision is the share of predicted samples near the ground truth and
    recall the share of ground-truth samples near the prediction, in percent.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mesh_core import IndexedMesh, face_areas

CHAMFER_CONVENTION = "mean_sq_p2q+mean_sq_q2p"


@dataclass(frozen=True)
class MetricsConfig:
    sample_count: int = 10000
    tau: float = 1e-4
    scale: float = 0.57
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")


@dataclass
class SampledCloud:
    points: np.ndarray
    face: np.ndarray
    bary: np.ndarray
    source: str = ""

    def __len__(self):
        return len(self.points)


@dataclass
class MetricsReport:
    chamfer: float
    f1_tau: float
    f1_2tau: float
    unreferenced_pct: float | None
    samples: int
    tau: float
    scale: float
    seed: int
    chamfer_convention: str = CHAMFER_CONVENTION

    def as_dict(self) -> dict:
        return asdict(self)


def _cloud(x) -> np.ndarray:
    pts = np.asarray(getattr(x, "points", x), dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty point cloud")
    return pts


def sample_surface(mesh: IndexedMesh, n: int, seed: int = 0) -> SampledCloud:
    """Area-weighted uniform samples on the surface."""
    areas = face_areas(mesh.vertices, mesh.faces)
    total = areas.sum()
    if not total > 0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(areas)
    face = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    face = np.minimum(face, len(areas) - 1)
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    bary = np.stack([1.0 - s, s * (1.0 - r2), s * r2], axis=1)
    tri = mesh.vertices[mesh.faces[face]]
    pts = np.einsum("ij,ijk->ik", bary, tri)
    return SampledCloud(pts, face, bary)


def nearest_sq(src, dst) -> np.ndarray:
    """Squared distance from every point of ``src`` to its nearest in ``dst``."""
    d, _ = cKDTree(_cloud(dst)).query(_cloud(src))
    return d * d


def chamfer(P, Q) -> float:
    return float(nearest_sq(P, Q).mean() + nearest_sq(Q, P).mean())


def f1_score(P, Q, tau: float) -> float:
    """F1 in percent between ``P`` (ground truth) and ``Q`` (prediction)."""
    precision = 100.0 * float((nearest_sq(Q, P) <= tau).mean())
    recall = 100.0 * float((nearest_sq(P, Q) <= tau).mean())
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def mesh_loss(M1: IndexedMesh, P, M2: IndexedMesh, Q, n: int = 10000, seed: int = 0) -> float:
    """Sum of squared distances of P to samples of M2 and of Q to samples of M1."""
    P_hat = sample_surface(M1, n, seed)
    Q_hat = sample_surface(M2, n, seed + 1)
    return float(nearest_sq(P, Q_hat).sum() + nearest_sq(Q, P_hat).sum())


def unreferenced_fraction(points, mesh: IndexedMesh, tol: float = 1e-9) -> float:
    """Percent of points not matching any face-referenced vertex of ``mesh``."""
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return 0.0
    used = mesh.vertices[mesh.referenced_vertices()]
    if len(used) == 0:
        return 100.0
    d, _ = cKDTree(used).query(pts, distance_upper_bound=tol * 2 + 1e-300)
    return 100.0 * float((d > tol).mean())


def evaluate(
    gt: IndexedMesh,
    pred: IndexedMesh,
    config: MetricsConfig = MetricsConfig(),
    points=None,
) -> MetricsReport:
    """Score ``pred`` against ``gt`` after scaling both by ``config.scale``."""
    gt_s = IndexedMesh(gt.vertices * config.scale, gt.faces)
    pred_s = IndexedMesh(pred.vertices * config.scale, pred.faces)
    P = sample_surface(gt_s, config.sample_count, config.seed)
    Q = sample_surface(pred_s, config.sample_count, config.seed + 1)
    unref = None if points is None else unreferenced_fraction(points, pred)
    return MetricsReport(
        chamfer=chamfer(P, Q),
        f1_tau=f1_score(P, Q, config.tau),
        f1_2tau=f1_score(P, Q, 2 * config.tau),
        unreferenced_pct=unref,
        samples=config.sample_count,
        tau=config.tau,
        scale=config.scale,
        seed=config.seed,
    )
