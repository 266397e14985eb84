import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from digft.graph import (
    DirectedGraph,
    EdgeListError,
    from_edge_list,
    gen_random_geometric,
    gen_scale_free,
    gen_three_cluster,
    laplacian,
    read_edge_list,
    symmetrize,
    to_edge_list,
    write_edge_list,
)


def test_single_edge_follows_storage_convention():
    g = from_edge_list("0\t1\t1.0")
    assert g.n == 2
    assert g.edges == ((0, 1, 1.0),)
    assert g.adjacency[1, 0] == 1.0 and g.adjacency[0, 1] == 0.0


def test_header_only_gives_edgeless_graph():
    g = from_edge_list("n=3\n")
    assert g.n == 3 and g.num_edges == 0


def test_duplicate_edge_reported_with_line():
    with pytest.raises(EdgeListError) as exc:
        from_edge_list("0\t1\t1.0\n0\t1\t2.0")
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "text, line",
    [
        ("0\t0\t1.0", 1),
        ("0\t1\t-1.0", 1),
        ("0\t1\t0", 1),
        ("# c\n0\t1", 2),
        ("n=2\n0\t5\t1.0", 2),
        ("0\tx\t1.0", 1),
    ],
)
def test_malformed_lines(text, line):
    with pytest.raises(EdgeListError) as exc:
        from_edge_list(text)
    assert exc.value.line == line


def test_comments_and_blank_lines_are_skipped():
    g = from_edge_list("# header comment\n\n0\t2\t0.5  # trailing\n")
    assert g.n == 3 and g.edges == ((0, 2, 0.5),)


def test_edgeless_edge_list_is_header_only():
    text = to_edge_list(DirectedGraph(3, ()))
    assert text.strip() == "n=3"


def test_single_edge_edge_list_has_one_line():
    lines = to_edge_list(DirectedGraph(2, ((0, 1, 2.5),))).strip().splitlines()
    assert lines[1:] == ["0\t1\t2.5"]


@pytest.mark.parametrize(
    "g",
    [
        gen_three_cluster("B"),
        gen_scale_free(12, 2, 3),
        gen_random_geometric(10, 0.5, 0.4, 1),
        DirectedGraph(4, ((0, 1, 0.1), (2, 3, 1 / 3))),
    ],
)
def test_edge_list_round_trip(g, tmp_path):
    assert from_edge_list(to_edge_list(g)) == g
    write_edge_list(g, tmp_path / "g.tsv")
    assert read_edge_list(tmp_path / "g.tsv") == g


def test_laplacian_hand_cases():
    assert np.array_equal(laplacian(DirectedGraph(2, ())), np.zeros((2, 2)))
    assert np.array_equal(laplacian(DirectedGraph(2, ((0, 1, 1.0),))), [[0, 0], [-1, 1]])
    assert np.array_equal(laplacian(DirectedGraph.undirected(2, [(0, 1, 1.0)])), [[1, -1], [-1, 1]])


def test_symmetrize_cases():
    g = symmetrize(DirectedGraph(2, ((0, 1, 1.0),)))
    assert g.edges == ((0, 1, 0.5), (1, 0, 0.5))
    und = gen_scale_free(8, 2, 0)
    assert symmetrize(und) == und
    assert symmetrize(DirectedGraph(3, ())).num_edges == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.floats(0.1, 1.5), st.floats(0, 1), st.integers(0, 10_000))
def test_generated_graph_invariants(n, radius, frac, seed):
    g = gen_random_geometric(n, radius, frac, seed)
    L = laplacian(g)
    assert np.all(L.sum(axis=1) == 0.0)
    s = symmetrize(g)
    assert symmetrize(s) == s
    A = g.adjacency
    assert np.allclose(s.adjacency, (A + A.T) / 2, atol=1e-15)
    Ls = laplacian(s)
    assert np.array_equal(Ls, Ls.T) and np.allclose(Ls.sum(axis=1), 0.0, atol=1e-14)
    assert gen_random_geometric(n, radius, frac, seed) == g


def test_scale_free_examples():
    g = gen_scale_free(20, 2, 1)
    deg = (g.adjacency > 0).sum(axis=1)
    assert g.n == 20 and deg.min() >= 2 and g.is_symmetric
    k5 = gen_scale_free(5, 4, 0)
    assert k5.num_edges == 20
    assert gen_scale_free(15, 3, 7) == gen_scale_free(15, 3, 7)


@pytest.mark.parametrize("bad", [(3, 3), (3, 0)])
def test_scale_free_rejects_bad_sizes(bad):
    with pytest.raises(ValueError):
        gen_scale_free(bad[0], bad[1], 0)


def test_random_geometric_directedness_extremes():
    g0 = gen_random_geometric(15, 0.5, 0.0, 2)
    assert g0.is_symmetric
    g1 = gen_random_geometric(15, 0.5, 1.0, 2)
    A = g1.adjacency
    assert not np.any((A > 0) & (A.T > 0))
    full = gen_random_geometric(6, np.sqrt(2) + 1e-9, 0.0, 0)
    assert full.num_edges == 30
    with pytest.raises(ValueError):
        gen_random_geometric(5, 0.3, 1.5, 0)


def test_three_cluster_variants():
    a, b, c = (gen_three_cluster(v) for v in "ABC")
    assert a.n == 15 and a.num_edges == 62
    assert set(b.edges) - set(a.edges) == {(6, 4, 1.0)}
    A = c.adjacency
    cluster = np.arange(15) // 5
    inter = [(s, d) for s, d, _ in c.edges if cluster[s] != cluster[d]]
    assert len(inter) == 3
    # no pair of clusters linked both ways
    pairs = {(cluster[s], cluster[d]) for s, d in inter}
    assert not any((q, p) in pairs for p, q in pairs)
    assert np.all(laplacian(c).sum(axis=1) == 0)
    with pytest.raises(ValueError):
        gen_three_cluster("D")


def test_graph_validation():
    with pytest.raises(ValueError):
        DirectedGraph(2, ((0, 1, 0.0),))
    with pytest.raises(ValueError):
        DirectedGraph(2, ((0, 1, 1.0), (0, 1, 2.0)))
    with pytest.raises(ValueError):
        DirectedGraph(2, ((1, 1, 1.0),))
    assert not DirectedGraph(2, ((0, 1, 1.0),)).is_symmetric
    assert DirectedGraph.from_adjacency(np.array([[0, 0], [2.0, 0]])).edges == ((0, 1, 2.0),)
