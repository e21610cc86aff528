import numpy as np
import pytest

from conftest import brute_nearest_sq
from gamesh import metrics, shapes
from gamesh.mesh_core import IndexedMesh, face_areas


def _brute_chamfer(P, Q):
    return brute_nearest_sq(P, Q).mean() + brute_nearest_sq(Q, P).mean()


def _brute_f1(P, Q, tau):
    precision = 100.0 * (brute_nearest_sq(Q, P) <= tau).mean()
    recall = 100.0 * (brute_nearest_sq(P, Q) <= tau).mean()
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


@pytest.mark.parametrize("n, m", [(1, 1), (50, 80), (700, 300)])
def test_chamfer_and_f1_match_brute_force(rng, n, m):
    P = rng.uniform(size=(n, 3))
    Q = rng.uniform(size=(m, 3)) * 1.1
    assert metrics.chamfer(P, Q) == pytest.approx(_brute_chamfer(P, Q), rel=1e-12)
    for tau in (1e-4, 1e-2, 0.05):
        assert metrics.f1_score(P, Q, tau) == pytest.approx(_brute_f1(P, Q, tau), rel=1e-12, abs=1e-12)


def test_f1_asymmetric_case():
    P = np.array([[0.0, 0, 0], [10, 0, 0]])
    Q = np.array([[0.0, 0, 0]])
    # precision 100 (Q's only point is on P), recall 50
    assert metrics.f1_score(P, Q, 1e-6) == pytest.approx(2 * 100 * 50 / 150)


def test_self_scores(rng):
    P = rng.normal(size=(500, 3))
    assert metrics.f1_score(P, P, 1e-12) == 100.0
    assert metrics.chamfer(P, P) == 0.0


def test_disjoint_clouds_f1_zero():
    assert metrics.f1_score(np.zeros((3, 3)), np.ones((3, 3)), 0.1) == 0.0


def test_empty_cloud_rejected():
    with pytest.raises(ValueError):
        metrics.chamfer(np.zeros((0, 3)), np.zeros((1, 3)))


def test_sampling_is_area_weighted():
    # two triangles with area ratio 1:3
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [5, 0, 0], [2, 2, 0]], float)
    mesh = IndexedMesh(v, np.array([[0, 1, 2], [3, 4, 5]]))
    areas = face_areas(mesh.vertices, mesh.faces)
    p = areas[0] / areas.sum()
    n = 20000
    s = metrics.sample_surface(mesh, n, seed=3)
    k = (s.face == 0).sum()
    # binomial: within 5 standard deviations
    assert abs(k - n * p) < 5 * np.sqrt(n * p * (1 - p))


def test_samples_lie_on_their_faces():
    m = shapes.icosphere(2)
    s = metrics.sample_surface(m, 2000, seed=1)
    assert (s.bary >= 0).all() and np.allclose(s.bary.sum(1), 1.0)
    assert np.allclose(np.einsum("ij,ijk->ik", s.bary, m.vertices[m.faces[s.face]]), s.points)


def test_sampling_uniform_within_triangle():
    m = IndexedMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), np.array([[0, 1, 2]]))
    s = metrics.sample_surface(m, 40000, seed=7)
    # uniform density: mean at the centroid, x-marginal density 2(1-x)
    assert np.allclose(s.points.mean(0), [1 / 3, 1 / 3, 0], atol=5e-3)
    assert (s.points[:, 0] < 0.5).mean() == pytest.approx(0.75, abs=0.01)


def test_sampling_is_seeded():
    m = shapes.icosphere(1)
    a, b = metrics.sample_surface(m, 100, 5), metrics.sample_surface(m, 100, 5)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, metrics.sample_surface(m, 100, 6).points)


def test_zero_area_rejected():
    m = IndexedMesh(np.zeros((3, 3)), np.array([[0, 1, 2]]))
    with pytest.raises(ValueError, match="zero surface area"):
        metrics.sample_surface(m, 10)


def test_mesh_loss_matches_brute_force(rng):
    m1, m2 = shapes.icosphere(1), shapes.icosphere(1, radius=1.1)
    P, Q = rng.normal(size=(60, 3)), rng.normal(size=(40, 3))
    P_hat = metrics.sample_surface(m1, 500, 2).points
    Q_hat = metrics.sample_surface(m2, 500, 3).points
    ref = brute_nearest_sq(P, Q_hat).sum() + brute_nearest_sq(Q, P_hat).sum()
    assert metrics.mesh_loss(m1, P, m2, Q, 500, seed=2) == pytest.approx(ref, rel=1e-12)


def test_unreferenced_fraction():
    m = shapes.tetrahedron()
    pts = np.concatenate([m.vertices, [[5.0, 5, 5]]])
    assert metrics.unreferenced_fraction(pts, m) == 20.0
    # a vertex present but used by no face counts as unreferenced
    sub = IndexedMesh(m.vertices, m.faces[:1])
    assert metrics.unreferenced_fraction(m.vertices, sub) == 25.0


def test_self_evaluation():
    m = shapes.normalize(shapes.icosphere(4))
    rep = metrics.evaluate(m, m, metrics.MetricsConfig(), points=m.vertices)
    assert rep.f1_tau >= 99.0 and rep.f1_2tau >= rep.f1_tau
    assert rep.unreferenced_pct == 0.0
    assert rep.as_dict()["chamfer_convention"] == metrics.CHAMFER_CONVENTION


def test_scale_applies_to_both_meshes():
    m = shapes.normalize(shapes.icosphere(3))
    big = IndexedMesh(m.vertices * 2, m.faces)
    c1 = metrics.evaluate(m, big, metrics.MetricsConfig(sample_count=2000, scale=1.0)).chamfer
    c2 = metrics.evaluate(m, big, metrics.MetricsConfig(sample_count=2000, scale=0.5)).chamfer
    assert c2 == pytest.approx(0.25 * c1, rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        metrics.MetricsConfig(sample_count=0)
    with pytest.raises(ValueError):
        metrics.MetricsConfig(tau=0)
