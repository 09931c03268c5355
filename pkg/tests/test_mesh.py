import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirchhoff_ocp.mesh import (
    Mesh,
    MeshError,
    MeshWarning,
    generate_rect,
    load_mesh,
    refine,
    refine_uniform,
    save_mesh,
)

SQUARE = (-0.5, 0.5, -0.5, 0.5)


@pytest.mark.parametrize("n, nv, nt", [(1, 4, 2), (2, 9, 8), (16, 289, 512)])
def test_generate_counts(n, nv, nt):
    m = generate_rect(*SQUARE, n)
    assert (m.n_vertices, m.n_triangles) == (nv, nt)
    assert (n + 1) ** 2 == nv and 2 * n * n == nt


@pytest.mark.parametrize("bad", [0, -3, 1.5])
def test_generate_rejects_bad_n(bad):
    with pytest.raises(MeshError):
        generate_rect(*SQUARE, bad)


def test_generate_rejects_degenerate_rectangle():
    with pytest.raises(MeshError):
        generate_rect(0.5, 0.5, 0, 1, 3)


def test_diagonal_runs_lower_left_to_upper_right():
    m = generate_rect(0, 1, 0, 1, 1)
    # both triangles contain vertex 0 (0,0) and vertex 3 (1,1)
    assert all({0, 3} <= set(t) for t in m.triangles.tolist())


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 12), w=st.floats(0.1, 10), h=st.floats(0.1, 10))
def test_generated_mesh_invariants(n, w, h):
    m = generate_rect(0, w, 0, h, n)
    assert np.all(m.areas() > 0)
    assert m.euler_characteristic() == 1
    np.testing.assert_allclose(m.areas().sum(), w * h, rtol=1e-12)
    x, y = m.vertices.T
    on_edge = np.isclose(x, 0) | np.isclose(x, w) | np.isclose(y, 0) | np.isclose(y, h)
    np.testing.assert_array_equal(m.boundary_vertex, on_edge)


def test_refine_counts_small():
    m = generate_rect(*SQUARE, 1)
    assert m.n_edges == 5
    r = refine_uniform(m)
    assert (r.n_vertices, r.n_triangles) == (9, 8)


def test_refine_counts_reference_levels():
    # 177 vertices and 312 triangles force 488 edges, 40 of them on the boundary
    m = _grow_to(generate_rect(0, 1, 0, 1, 1), 177, 312)
    assert (m.n_vertices, m.n_triangles) == (177, 312)
    r1 = refine_uniform(m)
    assert (r1.n_vertices, r1.n_triangles) == (665, 1248)
    r2 = refine_uniform(r1)
    assert (r2.n_vertices, r2.n_triangles) == (2577, 4992)


def _grow_to(mesh, nv, nt):
    """Unstructured mesh with prescribed counts, grown from the two-triangle
    square.  A centroid insertion adds 1 vertex and 2 triangles, a boundary
    edge split adds 1 vertex and 1 triangle."""
    V = mesh.vertices.tolist()
    T = mesh.triangles.tolist()
    # counts after k interior insertions and j boundary splits:
    # nv = 4 + k + j, nt = 2 + 2k + j
    k = (nt - 2) - (nv - 4)
    j = (nv - 4) - k
    assert k >= 0 and j >= 0
    for _ in range(k):
        # split the largest triangle at its centroid
        areas = [_area(V, t) for t in T]
        i = int(np.argmax(areas))
        a, b, c = T.pop(i)
        V.append([(V[a][0] + V[b][0] + V[c][0]) / 3, (V[a][1] + V[b][1] + V[c][1]) / 3])
        m = len(V) - 1
        T += [[a, b, m], [b, c, m], [c, a, m]]
    for _ in range(j):
        mm = Mesh.from_arrays(V, T)
        bedges = mm.boundary_edges()
        lens = np.linalg.norm(mm.vertices[bedges[:, 0]] - mm.vertices[bedges[:, 1]], axis=1)
        a, b = bedges[int(np.argmax(lens))]
        idx = next(i for i, t in enumerate(T) if a in t and b in t)
        t = T.pop(idx)
        V.append([(V[a][0] + V[b][0]) / 2, (V[a][1] + V[b][1]) / 2])
        m = len(V) - 1
        # keep counter-clockwise order by substituting into the parent
        t1 = [m if v == b else v for v in t]
        t2 = [m if v == a else v for v in t]
        T += [t1, t2]
    return Mesh.from_arrays(V, T)


def _area(V, t):
    (x0, y0), (x1, y1), (x2, y2) = (V[i] for i in t)
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


@pytest.mark.parametrize("n", [1, 3, 6])
def test_refine_invariants(n):
    m = generate_rect(*SQUARE, n)
    r = refine_uniform(m)
    assert r.n_triangles == 4 * m.n_triangles
    assert r.n_vertices == m.n_vertices + m.n_edges
    assert r.euler_characteristic() == 1
    assert np.all(r.areas() > 0)
    np.testing.assert_allclose(r.areas().sum(), m.areas().sum(), rtol=1e-14)
    np.testing.assert_array_equal(r.boundary_vertex[: m.n_vertices], m.boundary_vertex)
    np.testing.assert_array_equal(r.vertices[: m.n_vertices], m.vertices)


def test_refined_structured_grid_is_finer_structured_grid():
    r = refine(generate_rect(*SQUARE, 3), 1)
    g = generate_rect(*SQUARE, 6)
    key = lambda V: np.lexsort(np.round(V, 12).T[::-1])
    np.testing.assert_allclose(r.vertices[key(r.vertices)], g.vertices[key(g.vertices)], atol=1e-14)


def test_save_load_roundtrip(tmp_path):
    m = generate_rect(*SQUARE, 2)
    path = tmp_path / "m.txt"
    save_mesh(m, path)
    text = path.read_bytes()
    assert b"\r" not in text and text.splitlines()[0] == b"9 8"
    m2 = load_mesh(path)
    np.testing.assert_array_equal(m2.vertices, m.vertices)
    np.testing.assert_array_equal(m2.triangles, m.triangles)
    np.testing.assert_array_equal(m2.boundary_vertex, m.boundary_vertex)


def test_load_rejects_index_out_of_range(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 1\n0 0\n1 0\n0 1\n0 1 3\n")
    with pytest.raises(MeshError):
        load_mesh(path)


@pytest.mark.parametrize("text", ["", "3\n", "3 1\n0 0\n1 0\n0 1\n", "3 1\n0 0\n1 x\n0 1\n0 1 2\n",
                                  "3 1\n0 0\n1 0\n0 1\n0 1\n"])
def test_load_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(MeshError):
        load_mesh(path)


def test_duplicated_triangle_warns(tmp_path):
    path = tmp_path / "dup.txt"
    path.write_text("4 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 2 3\n")
    with pytest.warns(MeshWarning):
        m = load_mesh(path)
    assert m.n_triangles == 3


def test_load_reorients_clockwise(tmp_path):
    path = tmp_path / "cw.txt"
    path.write_text("3 1\n0 0\n0 1\n1 0\n0 1 2\n")
    m = load_mesh(path)
    assert m.areas()[0] > 0
    with pytest.raises(MeshError):
        load_mesh(path, reorient=False)


def test_zero_area_rejected():
    with pytest.raises(MeshError):
        Mesh.from_arrays([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])


def test_hanging_node_rejected():
    # square split in two, right half split again with a vertex on the diagonal
    V = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]
    T = [[0, 1, 4], [1, 2, 4], [0, 2, 3]]
    with pytest.raises(MeshError):
        Mesh.from_arrays(V, T)


def test_mesh_arrays_are_read_only():
    m = generate_rect(*SQUARE, 2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        generate_rect(*SQUARE, 3)
