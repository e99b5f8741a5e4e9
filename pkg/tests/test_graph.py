import numpy as np
import pytest

from entrograph.errors import DegenerateGraphError, ParseError, ValidationError
from entrograph.fixtures import barbell6, k2, path3, triangle
from entrograph.graph import (
    Graph,
    connected_components,
    is_connected,
    load_attributes,
    load_edge_list,
    relabel_edge_list,
    save_attributes,
    save_edge_list,
    validate_attributes,
    volume,
)


def test_basic_construction():
    g = Graph(3, [(0, 1, 1.0), (1, 2, 2.5)])
    assert g.n == 3
    assert g.edge_count == 2
    assert g.weight(1, 0) == 1.0
    assert g.weight(2, 1) == 2.5
    assert not g.has_edge(0, 2)
    np.testing.assert_allclose(g.degrees, [1.0, 3.5, 2.5])
    assert volume(g) == 7.0


def test_edges_sorted_and_canonical():
    g = Graph(4, [(3, 1, 1.0), (2, 0, 1.0), (1, 0, 1.0)])
    assert g.edges() == [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0)]


def test_neighbors_sorted():
    g = barbell6()
    assert [v for v, _ in g.neighbors(2)] == [0, 1, 3]
    assert [v for v, _ in g.neighbors(3)] == [2, 4, 5]


def test_rejected_edges():
    with pytest.raises(ValidationError):
        Graph(2, [(0, 0, 1.0)])
    with pytest.raises(ValidationError):
        Graph(2, [(0, 2, 1.0)])
    with pytest.raises(ValidationError):
        Graph(2, [(0, 1, 0.0)])
    with pytest.raises(ValidationError):
        Graph(2, [(0, 1, -2.0)])
    with pytest.raises(ValidationError):
        Graph(2, [(0, 1, float("nan"))])
    with pytest.raises(ValidationError):
        Graph(3, [(0, 1, 1.0), (1, 0, 2.0)])


def test_volume_on_empty_graph():
    with pytest.raises(DegenerateGraphError):
        volume(Graph(3, []))


def test_csr_matches_neighbors():
    g = barbell6()
    indptr, nbr, wt = g.csr()
    for u in range(g.n):
        row = list(zip(nbr[indptr[u]:indptr[u + 1]].tolist(),
                       wt[indptr[u]:indptr[u + 1]].tolist()))
        assert row == g.neighbors(u)


def test_components():
    g = barbell6()
    assert is_connected(g)
    two = Graph(6, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
                    (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)])
    assert not is_connected(two)
    assert connected_components(two) == [[0, 1, 2], [3, 4, 5]]


def test_with_attributes():
    g = k2()
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    g2 = g.with_attributes(x)
    assert g2.attributes is not None
    assert g.attributes is None
    assert g2.edges() == g.edges()


def test_attribute_validation():
    validate_attributes(np.zeros((3, 2)), n=3)
    with pytest.raises(ValidationError):
        validate_attributes(np.zeros(3), n=3)
    with pytest.raises(ValidationError):
        validate_attributes(np.zeros((3, 0)), n=3)
    with pytest.raises(ValidationError):
        validate_attributes(np.zeros((2, 2)), n=3)
    bad = np.ones((3, 2))
    bad[1, 1] = np.inf
    with pytest.raises(ValidationError):
        validate_attributes(bad, n=3)


def test_edge_list_roundtrip(tmp_path):
    g = Graph(5, [(0, 1, 1.25), (2, 4, 0.1), (1, 3, 3.0)])
    p = tmp_path / "g.tsv"
    save_edge_list(g, p)
    g2 = load_edge_list(p)
    assert g2.n == 5
    assert g2.edges() == g.edges()


def test_edge_list_vertex_count_from_header(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("# n=4\n0\t1\t1.0\n")
    g = load_edge_list(p)
    assert g.n == 4
    assert g.edge_count == 1


def test_edge_list_default_weight(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\n1\t2\t2.0\n")
    g = load_edge_list(p)
    assert g.weight(0, 1) == 1.0
    assert g.weight(1, 2) == 2.0


def test_edge_list_parse_errors(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\t1.0\njunk\n")
    with pytest.raises(ParseError) as ei:
        load_edge_list(p)
    assert "line 2" in str(ei.value)

    p.write_text("0\t1\tx\n")
    with pytest.raises(ParseError):
        load_edge_list(p)

    p.write_text("0\t0\t1.0\n")
    with pytest.raises(ParseError):
        load_edge_list(p)

    with pytest.raises(ParseError):
        load_edge_list(tmp_path / "missing.tsv")


def test_attributes_roundtrip(tmp_path):
    x = np.array([[0.5, 1.5], [2.0, -1.0], [0.0, 3.25]])
    p = tmp_path / "x.tsv"
    save_attributes(x, p)
    x2 = load_attributes(p)
    np.testing.assert_array_equal(x, x2)


def test_attributes_rows_any_order(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("2\t9.0\n0\t1.0\n1\t4.0\n")
    x = load_attributes(p)
    np.testing.assert_array_equal(x, np.array([[1.0], [4.0], [9.0]]))


def test_attributes_errors(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("0\t1.0\n0\t2.0\n")
    with pytest.raises(ParseError):
        load_attributes(p)
    p.write_text("0\t1.0\n2\t2.0\n")
    with pytest.raises(ParseError):
        load_attributes(p)
    p.write_text("0\t1.0\t2.0\n1\t3.0\n")
    with pytest.raises(ParseError):
        load_attributes(p)
    p.write_text("0\tinf\n")
    with pytest.raises(ParseError):
        load_attributes(p)


def test_relabel(tmp_path):
    src = tmp_path / "raw.tsv"
    src.write_text("alice\tbob\t2.0\nbob\tcarol\ncarol\talice\t1.5\n")
    dst = tmp_path / "clean.tsv"
    mapping = tmp_path / "map.tsv"
    relabel_edge_list(src, dst, mapping)
    g = load_edge_list(dst)
    assert g.n == 3
    assert g.weight(0, 1) == 2.0
    assert g.weight(1, 2) == 1.0
    assert g.weight(0, 2) == 1.5
    lines = mapping.read_text().splitlines()
    assert lines == ["alice\t0", "bob\t1", "carol\t2"]


def test_fixture_shapes():
    assert k2().edge_count == 1
    assert path3().edges() == [(0, 1, 1.0), (1, 2, 1.0)]
    assert triangle().edge_count == 3
    b = barbell6()
    assert b.edge_count == 7
    assert volume(b) == 14.0
