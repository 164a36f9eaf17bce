import numpy as np
import pytest

from rivet.errors import InputError
from rivet.fem2d import ct_like_mesh, l_shape_mesh, load_mesh, rectangle, save_mesh, write_vtk


def test_rectangle_sets_and_area():
    m = rectangle(np.linspace(0, 2, 5), np.linspace(0, 1, 3))
    assert m.n_nodes == 15 and m.n_elements == 8
    assert m.area == pytest.approx(2.0)
    assert set(m.node_sets) == {"left", "right", "bottom", "top"}


def test_mixed_mesh_area(mixed_mesh):
    assert mixed_mesh.area == pytest.approx(1.0)
    assert [g.kind for g in mixed_mesh.groups] == ["quad4", "tri3"]


def test_roundtrip(tmp_path, mixed_mesh):
    f = tmp_path / "m.txt"
    save_mesh(mixed_mesh, f)
    m = load_mesh(f)
    np.testing.assert_array_equal(m.nodes, mixed_mesh.nodes)
    np.testing.assert_array_equal(m.tris, mixed_mesh.tris)
    np.testing.assert_array_equal(m.node_sets["left"], mixed_mesh.node_sets["left"])


def test_arbitrary_ids_are_remapped(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("# one triangle\nN 10 0 0\nN 20 1 0\nN 30 0 1\nE 7 tri3 10 20 30\nS tip 30\n")
    m = load_mesh(f)
    assert m.tris.tolist() == [[0, 1, 2]] and m.node_set("tip").tolist() == [2]


@pytest.mark.parametrize("text, match", [
    ("N 1 0 0\nE 1 hex8 1 1 1 1\n", "unknown element"),
    ("N 1 0 0\nN 2 1 0\nN 3 0 1\nE 1 tri3 1 2 4\n", "unknown node"),
    ("N 1 0 0\nN 2 1 0\nN 3 0 1\nE 1 tri3 1 3 2\n", "Jacobian"),
    ("N 1 0 0\nN 1 1 0\n", "duplicate"),
    ("X 1\n", "unknown record"),
])
def test_invalid_files(tmp_path, text, match):
    f = tmp_path / "bad.txt"
    f.write_text(text)
    with pytest.raises(InputError, match=match):
        load_mesh(f)


def test_missing_file_and_set(tmp_path, mixed_mesh):
    with pytest.raises(InputError):
        load_mesh(tmp_path / "none.txt")
    with pytest.raises(InputError, match="unknown node set"):
        mixed_mesh.node_set("nope")


def test_ct_like_mesh():
    m = ct_like_mesh(h_fine=0.025, h_coarse=0.1, band=0.1)
    assert m.n_elements == 400 and m.area == pytest.approx(1.0)
    for name in ("left", "right", "anchor", "tip"):
        assert m.node_set(name).size
    # the slit is open: its two faces carry different nodes at the same place
    top = m.nodes[m.node_set("top")]
    assert len(np.unique(top.round(12), axis=0)) == len(top) - 1


def test_l_shape_mesh():
    m = l_shape_mesh()
    assert 450 <= m.n_elements <= 550
    assert m.area == pytest.approx(0.75 * 500**2)
    (load,) = m.node_set("load")
    assert m.nodes[load, 1] == pytest.approx(250.0) and m.nodes[load, 0] > 450


def test_vtk_writer(tmp_path, mixed_mesh):
    f = tmp_path / "s.vtk"
    n = mixed_mesh.n_nodes
    write_vtk(f, mixed_mesh, u=np.arange(2 * n, dtype=float), z=np.linspace(0, 1, n))
    text = f.read_text().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert f"POINTS {n} double" in text and "CELLS 6 26" in text
    assert text.count("9") >= 2 and "SCALARS z double 1" in text and "VECTORS u double" in text
