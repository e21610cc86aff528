import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import surface_points
from gamesh import shapes, spatial_index
from gamesh.augmentation import augment
from gamesh.mesh_core import IndexedMesh, topology_summary, validate
from gamesh.simplification import (
    CollapseMesh,
    collapse_cost,
    replay,
    simplify,
    simplify_quadric,
    unproject,
)

coord = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(coord, min_size=6, max_size=6), st.sampled_from([(0, 1), (1, 0), (1, 1)]))
def test_cost_formula(xs, labels):
    v1, v2 = np.array(xs[:3]), np.array(xs[3:])
    l1, l2 = labels
    ref = math.exp(l1 + l2) * sum((a - b) ** 2 for a, b in zip(v1, v2))
    assert collapse_cost(v1, v2, l1, l2) == pytest.approx(ref, rel=1e-12, abs=0)


def test_cost_rejects_projected_pair():
    with pytest.raises(ValueError, match="uncollapsible"):
        collapse_cost(np.zeros(3), np.ones(3), 0, 0)


def test_cost_ordering_prefers_mixed_edges():
    # equal lengths: a 0-1 edge is cheaper than a 1-1 edge by a factor e
    a, b = np.zeros(3), np.array([1.0, 0, 0])
    assert collapse_cost(a, b, 1, 1) / collapse_cost(a, b, 0, 1) == pytest.approx(math.e)


def test_would_flip_detects_fold():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    cm = CollapseMesh(v, np.array([[0, 1, 2], [1, 3, 2]]))
    assert not cm.would_flip(1, 3, np.array([1.0, 0.5, 0]))
    # dragging 1 and 3 past the diagonal reverses face 0
    assert cm.would_flip(1, 3, np.array([-1.0, -1.0, 0]))


def test_link_condition_on_tetrahedron():
    cm = CollapseMesh(*(lambda m: (m.vertices, m.faces))(shapes.tetrahedron()))
    # collapsing any tetrahedron edge folds its two other faces onto each other
    assert not cm.link_ok(0, 1)
    ico = shapes.icosphere(1)
    assert CollapseMesh(ico.vertices, ico.faces).link_ok(*ico.faces[0][:2])


def _aug(m, pts):
    return augment(m, spatial_index.project(spatial_index.build(m), pts))


def test_simplify_removes_all_prior_vertices(rng):
    m = shapes.icosphere(2)
    pts = surface_points(m, 200, rng)
    aug = _aug(m, pts)
    out, log = simplify(aug)
    assert out.n_vertices == len(pts)
    assert len(np.unique(out.faces)) == len(pts)
    assert topology_summary(out).euler == 2
    assert validate(out).clean
    assert log.as_dict()["collapses"] == len(log.steps)


def test_replay_reproduces_simplify(rng):
    m = shapes.torus(16, 8)
    pts = surface_points(m, 150, rng)
    aug = _aug(m, pts)
    out, log = simplify(aug)
    again = replay(aug, log)
    assert np.array_equal(again.faces, out.faces)
    assert np.array_equal(again.vertices, out.vertices)


def test_placement_rules(rng):
    m = shapes.icosphere(1)
    pts = surface_points(m, 40, rng)
    aug = _aug(m, pts)
    _, log = simplify(aug)
    for a, b, placement, _ in log.steps:
        mixed = aug.labels[a] != aug.labels[b]
        assert placement == ("keep-projected" if mixed else "midpoint")


def test_unproject_restores_inputs(rng):
    m = shapes.icosphere(2)
    pts = surface_points(m, 100, rng, noise=0.01)
    aug = _aug(m, pts)
    out, _ = simplify(aug)
    final = unproject(out, aug)
    assert np.array_equal(final.vertices, pts)
    assert np.array_equal(final.faces, out.faces)
    with pytest.raises(ValueError):
        unproject(out, pts[:-1])


@pytest.mark.parametrize("mesh, target", [(shapes.icosphere(3), 200), (shapes.torus(32, 16), 150)])
def test_quadric_decimation_keeps_topology(mesh, target):
    out = simplify_quadric(mesh, target)
    before, after = topology_summary(mesh), topology_summary(out)
    assert after.n_vertices == target
    assert after.euler == before.euler and after.genus == before.genus
    assert after.n_components == 1
    assert validate(out).clean


def test_quadric_keeps_flat_plane_flat():
    out = simplify_quadric(shapes.grid_square(8), 20)
    assert np.allclose(out.vertices[:, 2], 0.0)
    s = topology_summary(out)
    assert s.euler == 1 and s.n_non_manifold_edges == 0


def test_quadric_target_too_small():
    with pytest.raises(ValueError):
        simplify_quadric(shapes.icosphere(1), 3)


def test_quadric_noop_when_already_small():
    m = shapes.tetrahedron()
    assert simplify_quadric(m, 10).face_set() == m.face_set()


def test_collapse_drops_duplicate_faces():
    # two triangles on either side of edge 0-2; merging 3 into 1 makes them equal
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0]], float)
    cm = CollapseMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))
    cm.collapse(3, 1, v[1])
    assert cm.live_faces().tolist() == [[0, 1, 2]]
    assert not cm.vertex_alive[3]
