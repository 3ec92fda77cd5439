import numpy as np
import pytest

from nsaug.errors import ParseError, TopologyError, UnknownTag
from nsaug.mesh import CAVITY_TAGS, CYLINDER_TAGS, cavity_mesh, cylinder_mesh, read_mesh, unit_square_mesh, write_mesh

TWO_TRIANGLES = """\
nodes 4 triangles 2 facets 4
0 0
1 0
1 1
0 1
0 1 2
0 2 3
0 1 1
1 2 2
2 3 3
3 0 4
"""


def euler(mesh):
    return mesh.nv - len(mesh.edges) + mesh.nt


def test_read_unit_square(tmp_path):
    p = tmp_path / "sq.msh"
    p.write_text(TWO_TRIANGLES)
    m = read_mesh(p)
    assert (m.nv, m.nt, len(m.facets)) == (4, 2, 4)
    np.testing.assert_allclose(m.signed_areas, [0.5, 0.5])
    assert sorted(m.facet_tags) == [1, 2, 3, 4]


def test_clockwise_triangles_are_reoriented(tmp_path):
    p = tmp_path / "cw.msh"
    p.write_text(TWO_TRIANGLES.replace("0 1 2\n0 2 3", "0 2 1\n0 3 2"))
    m = read_mesh(p)
    assert np.all(m.signed_areas > 0)


def test_out_of_range_node(tmp_path):
    p = tmp_path / "bad.msh"
    p.write_text(TWO_TRIANGLES.replace("0 2 3\n", "0 2 99\n"))
    with pytest.raises(TopologyError):
        read_mesh(p)


@pytest.mark.parametrize(
    "text",
    ["", "nodes 4 triangles 2\n", TWO_TRIANGLES.replace("1 0\n", "1 zero\n"), TWO_TRIANGLES + "0 1 1\n"],
)
def test_malformed(tmp_path, text):
    p = tmp_path / "m.msh"
    p.write_text(text)
    with pytest.raises(ParseError):
        read_mesh(p)


def test_interior_facet_rejected(tmp_path):
    p = tmp_path / "f.msh"
    p.write_text(TWO_TRIANGLES.replace("3 0 4\n", "0 2 4\n"))
    with pytest.raises(TopologyError):
        read_mesh(p)


def test_write_read_round_trip(tmp_path):
    m = unit_square_mesh(3)
    write_mesh(m, tmp_path / "u.msh")
    r = read_mesh(tmp_path / "u.msh")
    np.testing.assert_array_equal(r.nodes, m.nodes)
    np.testing.assert_array_equal(r.triangles, m.triangles)
    np.testing.assert_array_equal(r.facet_tags, m.facet_tags)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_unit_square_counts(n):
    m = unit_square_mesh(n)
    assert m.nt == 2 * n * n and m.nv == (n + 1) ** 2
    assert euler(m) == 1
    assert np.isclose(m.signed_areas.sum(), 1.0)
    assert len(m.boundary_edges) == 4 * n == len(m.facets)


def test_unknown_tag():
    m = unit_square_mesh(2)
    with pytest.raises(UnknownTag):
        m.facets_with(9)
    with pytest.raises(UnknownTag):
        m.facets_with("nowhere")
    assert len(m.facets_with("top")) == 2


def test_cylinder_mesh_geometry():
    m = cylinder_mesh(0)
    assert euler(m) == 0  # one hole
    assert set(np.unique(m.facet_tags)) == set(CYLINDER_TAGS.values())
    assert np.isclose(m.signed_areas.sum(), 30.5 * 16 - np.pi * 0.25, rtol=2e-3)
    # jet arcs are 25 degrees wide, centred on the vertical axis
    for name, sign in (("jet1", 1), ("jet2", -1)):
        pts = m.nodes[np.unique(m.facets[m.facets_with(name)])] - 8.0
        ang = np.degrees(np.arctan2(pts[:, 1], pts[:, 0]))
        assert np.all(np.abs(np.hypot(*pts.T) - 0.5) < 1e-12)
        assert np.isclose(ang.max() - ang.min(), 25.0)
        assert np.isclose(0.5 * (ang.max() + ang.min()), 90.0 * sign)


def test_cavity_mesh_breakpoints():
    m = cavity_mesh(0)
    assert euler(m) == 1
    assert set(np.unique(m.facet_tags)) == set(CAVITY_TAGS.values())
    xs = np.unique(m.nodes[:, 0])
    ys = np.unique(m.nodes[:, 1])
    for v in (0.06, 0.94):
        assert np.min(np.abs(xs - v)) < 1e-14
    for v in (0.12, 0.88):
        assert np.min(np.abs(ys - v)) < 1e-14
    jet = m.nodes[np.unique(m.facets[m.facets_with("jet1")])]
    assert np.allclose(jet[:, 0], 0.0) and np.isclose(jet[:, 1].min(), 0.88)


def test_refinement_levels_grow():
    assert cylinder_mesh(1).nt > cylinder_mesh(0).nt
    assert cavity_mesh(1).nt > cavity_mesh(0).nt
