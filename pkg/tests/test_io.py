import numpy as np
import pytest

from gamesh import io, shapes
from gamesh.io import FormatError


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_obj(tmp_path):
    m = io.read_mesh(_write(tmp_path, "a.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"))
    assert (m.n_vertices, m.n_faces) == (3, 1)
    assert m.faces.tolist() == [[0, 1, 2]]


def test_quad_is_fanned(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    m = io.read_mesh(_write(tmp_path, "q.obj", text))
    assert m.faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_obj_other_directives_and_slashes(tmp_path):
    text = "# hi\no thing\nv 0 0 0\nvn 0 0 1\nv 1 0 0\nvt 0 0\nv 0 1 0\ns off\nusemtl x\nf 1/1/1 2//1 -1\n"
    m = io.read_mesh(_write(tmp_path, "d.obj", text))
    assert m.faces.tolist() == [[0, 1, 2]]


def test_obj_index_out_of_range(tmp_path):
    with pytest.raises(FormatError) as err:
        io.read_mesh(_write(tmp_path, "e.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n"))
    assert err.value.line == 4 and "out of range" in str(err.value)


def test_obj_malformed_vertex(tmp_path):
    with pytest.raises(FormatError) as err:
        io.read_mesh(_write(tmp_path, "e.obj", "v 0 0 0\nv 1 zero 0\n"))
    assert err.value.line == 2


def test_obj_zero_index_rejected(tmp_path):
    with pytest.raises(FormatError):
        io.read_mesh(_write(tmp_path, "z.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"))


def test_off(tmp_path):
    text = "OFF\n# comment\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n4 0 1 2 3\n"
    m = io.read_mesh(_write(tmp_path, "a.off", text))
    assert m.faces.tolist() == [[0, 1, 2], [0, 1, 2], [0, 2, 3]]


def test_off_bad_index(tmp_path):
    with pytest.raises(FormatError) as err:
        io.read_mesh(_write(tmp_path, "b.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n"))
    assert err.value.line == 6


def test_off_missing_header(tmp_path):
    with pytest.raises(FormatError):
        io.read_mesh(_write(tmp_path, "c.off", "3 1 0\n"))


def test_round_trip_is_fixed_point(tmp_path, rng):
    m = shapes.torus(8, 6)
    m = type(m)(m.vertices + rng.normal(scale=1e-3, size=m.vertices.shape), m.faces)
    a, b = tmp_path / "a.obj", tmp_path / "b.obj"
    io.write_mesh(m, a)
    once = io.read_mesh(a)
    io.write_mesh(once, b)
    twice = io.read_mesh(b)
    assert a.read_text() == b.read_text()
    assert np.array_equal(once.vertices, twice.vertices)
    assert np.array_equal(once.faces, m.faces)
    assert np.allclose(once.vertices, m.vertices, rtol=1e-8)


def test_points(tmp_path):
    pts = io.read_points(_write(tmp_path, "p.xyz", "0 0 0\n# skip\n\n1 2 3\n"))
    assert pts.tolist() == [[0, 0, 0], [1, 2, 3]]


def test_points_wrong_count(tmp_path):
    with pytest.raises(FormatError) as err:
        io.read_points(_write(tmp_path, "p.xyz", "1 2\n"))
    assert err.value.line == 1


def test_points_round_trip_keeps_order(tmp_path, rng):
    pts = rng.normal(size=(50, 3))
    io.write_points(pts, tmp_path / "p.xyz")
    back = io.read_points(tmp_path / "p.xyz")
    assert np.allclose(back, pts, rtol=1e-8)
    io.write_points(back, tmp_path / "q.xyz")
    assert np.array_equal(io.read_points(tmp_path / "q.xyz"), back)
