import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nsaug import SnapshotSet, build_basis
from nsaug.errors import IoError, ParseError
from nsaug.fem import FeSpace, TaylorHood, to_vector
from nsaug.io import (
    load_basis,
    read_config,
    read_snapshots,
    read_vtk,
    save_basis,
    write_config,
    write_csv,
    write_snapshots,
    write_vtk,
)
from nsaug.mesh import unit_square_mesh


@settings(max_examples=30, deadline=None)
@given(
    arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 5)), elements=st.floats(allow_nan=False, width=64)),
    st.integers(1, 3),
)
def test_snapshot_round_trip_is_bitwise(tmp_path_factory, X, n_p):
    params = np.arange(X.shape[1] * n_p, dtype=float).reshape(X.shape[1], n_p) / 7
    path = tmp_path_factory.mktemp("snap") / "x.snap"
    write_snapshots(path, SnapshotSet("velocity", X, params))
    S = read_snapshots(path)
    assert S.data.tobytes() == np.asarray(X, float).tobytes()
    assert S.parameters.tobytes() == params.tobytes()


def test_snapshot_layout(tmp_path):
    X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    path = tmp_path / "x.snap"
    write_snapshots(path, SnapshotSet("pressure", X, [[0.5], [0.25]]))
    raw = path.read_bytes()
    assert raw[:5] == b"SNAP1"
    assert struct.unpack("<3q", raw[5:29]) == (3, 2, 1)
    body = np.frombuffer(raw[29:], "<f8")
    np.testing.assert_array_equal(body, [0.5, 0.25, 1, 3, 5, 2, 4, 6])


def test_empty_snapshot_file(tmp_path):
    path = tmp_path / "e.snap"
    write_snapshots(path, SnapshotSet("velocity", np.zeros((4, 0)), np.zeros((0, 2))))
    S = read_snapshots(path)
    assert S.data.shape == (4, 0) and S.parameters.shape == (0, 2)


def test_bad_snapshot_files(tmp_path):
    path = tmp_path / "x.snap"
    write_snapshots(path, SnapshotSet("velocity", np.ones((3, 2)), [[0.0], [1.0]]))
    raw = path.read_bytes()
    (tmp_path / "magic.snap").write_bytes(b"SNAP2" + raw[5:])
    (tmp_path / "short.snap").write_bytes(raw[:-8])
    for name in ("magic.snap", "short.snap"):
        with pytest.raises(ParseError):
            read_snapshots(tmp_path / name)
    with pytest.raises(IoError):
        read_snapshots(tmp_path / "missing.snap")


def test_basis_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((10, 4))
    b = build_basis(SnapshotSet("pressure", X, np.arange(4.0)), 0.1)
    save_basis(tmp_path / "b.npz", b)
    r = load_basis(tmp_path / "b.npz")
    np.testing.assert_array_equal(r.modes, b.modes)
    np.testing.assert_array_equal(r.mean, b.mean)
    assert r.epsilon == b.epsilon and r.field_kind == "pressure"
    with pytest.raises(IoError):
        load_basis(tmp_path / "none.npz")


def test_config_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# a run\nproblem = lid_cavity   # trailing comment\n\neps_u=1e-3\nalphas = 0.1, 0.5\n")
    assert read_config(p) == {"problem": "lid_cavity", "eps_u": "1e-3", "alphas": "0.1, 0.5"}
    write_config(tmp_path / "w.cfg", {"a": 1, "b": "x y"})
    assert read_config(tmp_path / "w.cfg") == {"a": "1", "b": "x y"}
    for bad in ("problem\n", "a = 1\na = 2\n", " = 3\n"):
        p.write_text(bad)
        with pytest.raises(ParseError):
            read_config(p)


def test_vtk_round_trip(tmp_path):
    mesh = unit_square_mesh(3)
    fe = TaylorHood(mesh)
    X, Y = fe.V.dof_coords.T
    u = to_vector(X, -Y)
    p = fe.Q.dof_coords[:, 0] ** 2
    zero = np.zeros(fe.V.ndof)
    write_vtk(mesh, {"velocity": u, "pressure": p, "zero field": zero}, tmp_path / "a.vtk")
    pts, tris, fields = read_vtk(tmp_path / "a.vtk")
    np.testing.assert_array_equal(pts, mesh.nodes)
    np.testing.assert_array_equal(tris, mesh.triangles)
    np.testing.assert_array_equal(fields["velocity"], np.column_stack([X, -Y])[: mesh.nv])
    np.testing.assert_array_equal(fields["pressure"], p)
    assert not np.any(fields["zero_field"])


def test_vtk_refined_shows_all_p2_nodes(tmp_path):
    mesh = unit_square_mesh(2)
    V = FeSpace(mesh, 2)
    X, _ = V.dof_coords.T
    write_vtk(mesh, {"s": X**2, "q": mesh.nodes[:, 1]}, tmp_path / "r.vtk", refine=True)
    pts, tris, fields = read_vtk(tmp_path / "r.vtk")
    assert len(pts) == V.ndof and len(tris) == 4 * mesh.nt
    np.testing.assert_array_equal(fields["s"], X**2)
    # P1 data at midpoints is the edge average, exact for linear fields
    np.testing.assert_allclose(fields["q"], V.dof_coords[:, 1])


def test_vtk_rejects_bad_length(tmp_path):
    with pytest.raises(IoError):
        write_vtk(unit_square_mesh(2), {"bad": np.zeros(5)}, tmp_path / "b.vtk")


def test_csv(tmp_path):
    write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 0.1), ("x", np.float64(1 / 3))])
    assert (tmp_path / "t.csv").read_text().splitlines() == ["a,b", "1,0.1", "x,0.3333333333333333"]
