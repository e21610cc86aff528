"""Text mesh and point-cloud formats: OBJ (read/write), OFF (read), XYZ."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh_core import IndexedMesh

FLOAT_FMT = "%.9g"


class FormatError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = str(path)
        self.line = line


def _floats(tokens, path, lineno, count=3):
    if len(tokens) < count:
        raise FormatError(path, lineno, f"expected {count} coordinates, got {len(tokens)}")
    try:
        return [float(t) for t in tokens[:count]]
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None


def _fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def _read_obj(path: Path) -> IndexedMesh:
    verts: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            tokens = raw.split()
            if not tokens:
                continue
            tag = tokens[0]
            if tag == "v":
                verts.append(_floats(tokens[1:], path, lineno))
            elif tag == "f":
                if len(tokens) < 4:
                    raise FormatError(path, lineno, "face needs at least 3 vertices")
                poly = []
                for t in tokens[1:]:
                    try:
                        i = int(t.split("/")[0])
                    except ValueError:
                        raise FormatError(path, lineno, f"bad face index {t!r}") from None
                    # negative indices are relative to the vertices read so far
                    i = i - 1 if i > 0 else len(verts) + i
                    if i < 0 or i >= len(verts):
                        raise FormatError(path, lineno, f"face index {t} out of range")
                    poly.append(i)
                faces.extend(_fan(poly))
    return IndexedMesh(
        np.array(verts, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
    )


def _read_off(path: Path) -> IndexedMesh:
    with open(path) as fh:
        lines = [(i, ln.split("#")[0].split()) for i, ln in enumerate(fh, 1)]
    lines = [(i, t) for i, t in lines if t]
    if not lines or not lines[0][1][0].endswith("OFF"):
        raise FormatError(path, lines[0][0] if lines else 1, "missing OFF header")
    header = lines[0][1][1:]
    pos = 1
    if not header:
        if len(lines) < 2:
            raise FormatError(path, 1, "missing element counts")
        lineno, header = lines[1]
        pos = 2
    try:
        nv, nf = int(header[0]), int(header[1])
    except (ValueError, IndexError):
        raise FormatError(path, lines[pos - 1][0], "bad element counts") from None
    if len(lines) < pos + nv + nf:
        raise FormatError(path, lines[-1][0], "file ends before all elements were read")
    verts = [_floats(t, path, i) for i, t in lines[pos:pos + nv]]
    faces = []
    for lineno, t in lines[pos + nv:pos + nv + nf]:
        try:
            n = int(t[0])
            poly = [int(x) for x in t[1:1 + n]]
        except ValueError:
            raise FormatError(path, lineno, "bad face record") from None
        if n < 3 or len(poly) != n:
            raise FormatError(path, lineno, "bad face record")
        if min(poly) < 0 or max(poly) >= nv:
            raise FormatError(path, lineno, "face index out of range")
        faces.extend(_fan(poly))
    return IndexedMesh(
        np.array(verts, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
    )


def read_mesh(path) -> IndexedMesh:
    """Read an OBJ or OFF triangle mesh; polygons are fan-triangulated."""
    path = Path(path)
    if path.suffix.lower() == ".off":
        return _read_off(path)
    return _read_obj(path)


def write_mesh(mesh: IndexedMesh, path) -> None:
    """Write OBJ with 9 significant digits per coordinate."""
    lines = ["v " + " ".join(FLOAT_FMT % c for c in v) for v in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    _write_text(path, lines)


def read_points(path) -> np.ndarray:
    """XYZ text, one point per line; blank and ``#`` lines are skipped."""
    pts = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            tokens = raw.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) != 3:
                raise FormatError(path, lineno, f"expected 3 values, got {len(tokens)}")
            pts.append(_floats(tokens, path, lineno))
    return np.array(pts, dtype=np.float64).reshape(-1, 3)


def write_points(points, path) -> None:
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64).reshape(-1, 3)
    _write_text(path, [" ".join(FLOAT_FMT % c for c in p) for p in pts.tolist()])


def _write_text(path, lines) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")
    os.replace(tmp, path)
