import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphpart.graph import (AttributedGraph, DatasetError, aggregate_features, homophily_ratio,
                             ingest_cora_content, load_dataset, load_generic, normalized_adjacency,
                             row_normalize, write_generic)

from conftest import random_graph


def write_dataset(tmp_path, edges, features, labels):
    (tmp_path / "edges.tsv").write_text(edges)
    (tmp_path / "features.csv").write_text(features)
    (tmp_path / "labels.csv").write_text(labels)
    return tmp_path


class TestLoadGeneric:
    def test_smallest_graph(self, tmp_path):
        write_dataset(tmp_path, "0 1\n1 0\n", "1.0,0.0\n0.0,1.0\n", "0\n1\n")
        g = load_generic(tmp_path)
        assert (g.n, g.num_edges, g.class_count) == (2, 1, 2)

    def test_self_loop_dropped(self, tmp_path):
        write_dataset(tmp_path, "0 1\n3 3\n2\t3\n", "1\n2\n3\n4\n", "0\n0\n1\n1\n")
        g = load_generic(tmp_path)
        assert g.num_edges == 2
        assert 3 not in g.neighbors(3)

    def test_duplicates_collapse(self, tmp_path):
        write_dataset(tmp_path, "0 1\n0 1\n1 0\n", "1\n2\n", "0\n0\n")
        assert load_generic(tmp_path).num_edges == 1

    @pytest.mark.parametrize("edges,features,labels,fragment", [
        ("0 5\n", "1\n2\n", "0\n1\n", "edges.tsv:1"),
        ("0 1\n0 x\n", "1\n2\n", "0\n1\n", "edges.tsv:2"),
        ("0 1\n", "1,2\n3\n", "0\n1\n", "features.csv:2"),
        ("0 1\n", "1\nabc\n", "0\n1\n", "features.csv:2"),
        ("0 1\n", "1\n2\n", "0\nfoo\n", "labels.csv:2"),
    ])
    def test_errors_name_file_and_line(self, tmp_path, edges, features, labels, fragment):
        write_dataset(tmp_path, edges, features, labels)
        with pytest.raises(DatasetError, match=fragment):
            load_generic(tmp_path)

    def test_missing_file(self, tmp_path):
        (tmp_path / "edges.tsv").write_text("0 1\n")
        with pytest.raises(DatasetError, match="features.csv: missing"):
            load_generic(tmp_path)

    def test_roundtrip_is_identity(self, tmp_path):
        g = random_graph(25, 0.2, seed=3)
        write_generic(g, tmp_path / "a")
        h = load_generic(tmp_path / "a")
        assert g.same_as(h)
        write_generic(h, tmp_path / "b")
        assert h.same_as(load_generic(tmp_path / "b"))
        meta = json.loads((tmp_path / "a" / "meta.json").read_text())
        assert meta == {"n": 25, "d": 3, "classes": g.class_count}


class TestIngestContent:
    def test_label_interning(self, tmp_path):
        (tmp_path / "x.content").write_text("p1 1 0 A\np2 0 1 B\np3 1 1 A\n")
        (tmp_path / "x.cites").write_text("p1 p2\np3 p1\n")
        g, skipped = ingest_cora_content(tmp_path / "x.content", tmp_path / "x.cites", tmp_path / "out")
        assert g.class_count == 2
        assert g.labels.tolist() == [0, 1, 0]
        assert g.num_edges == 2 and skipped == 0
        assert load_dataset(tmp_path / "out").same_as(g)
        assert load_dataset(tmp_path).same_as(g)

    def test_dangling_citation_skipped(self, tmp_path):
        (tmp_path / "x.content").write_text("p1 1 A\np2 0 B\n")
        (tmp_path / "x.cites").write_text("p1 p2\np1 ghost\n")
        g, skipped = ingest_cora_content(tmp_path / "x.content", tmp_path / "x.cites")
        assert skipped == 1
        assert g.num_edges == 1

    def test_empty_content(self, tmp_path):
        (tmp_path / "x.content").write_text("")
        (tmp_path / "x.cites").write_text("")
        with pytest.raises(DatasetError, match="empty"):
            ingest_cora_content(tmp_path / "x.content", tmp_path / "x.cites")

    def test_malformed_line(self, tmp_path):
        (tmp_path / "x.content").write_text("p1 1 0 A\np2 B\n")
        (tmp_path / "x.cites").write_text("")
        with pytest.raises(DatasetError, match="x.content:2"):
            ingest_cora_content(tmp_path / "x.content", tmp_path / "x.cites")


class TestNormalizedAdjacency:
    def test_isolated_node(self):
        g = AttributedGraph.from_edges(3, [(0, 1)], np.zeros((3, 1)))
        s = normalized_adjacency(g).toarray()
        assert s[2].tolist() == [0.0, 0.0, 1.0]

    def test_two_node_path(self):
        g = AttributedGraph.from_edges(2, [(0, 1)], np.eye(2))
        s = normalized_adjacency(g)
        np.testing.assert_allclose(s.toarray(), [[0.5, 0.5], [0.5, 0.5]], rtol=0, atol=1e-15)
        np.testing.assert_allclose(aggregate_features(s, np.eye(2), 1), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    @given(st.integers(1, 30), st.floats(0.0, 1.0), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_entries_match_degree_formula(self, n, p, seed):
        g = random_graph(n, p, seed)
        s = normalized_adjacency(g)
        dense = s.toarray()
        assert np.abs(dense - dense.T).max() == 0.0
        deg = g.degrees
        np.testing.assert_allclose(np.diag(dense), 1.0 / (deg + 1), rtol=1e-15)
        for u, v in g.edge_list():
            assert dense[u, v] == pytest.approx(1.0 / np.sqrt((deg[u] + 1) * (deg[v] + 1)), rel=1e-15)
        assert np.count_nonzero(dense) == n + 2 * g.num_edges
        assert dense.min() >= 0 and dense.max() <= 1.0
        for i in range(n):
            row = s.indices[s.indptr[i]:s.indptr[i + 1]]
            assert np.all(np.diff(row) > 0)


class TestAggregate:
    def test_zero_hops_is_identity(self):
        g = random_graph(10, 0.3, 1)
        s = normalized_adjacency(g)
        np.testing.assert_array_equal(aggregate_features(s, g.features, 0), g.features)

    def test_isolated_node_keeps_row(self):
        g = AttributedGraph.from_edges(1, [], [[3.0, -1.0]])
        s = normalized_adjacency(g)
        for hops in range(4):
            np.testing.assert_array_equal(aggregate_features(s, g.features, hops), [[3.0, -1.0]])

    def test_dimension_mismatch(self):
        g = random_graph(5, 0.5, 0)
        with pytest.raises(ValueError, match="dimension"):
            aggregate_features(normalized_adjacency(g), np.ones((4, 2)), 1)

    @given(st.integers(1, 30), st.floats(0.0, 1.0), st.integers(0, 3), st.integers(0, 3), st.integers(0, 999))
    @settings(max_examples=40, deadline=None)
    def test_dense_oracle_and_composition(self, n, p, a, b, seed):
        g = random_graph(n, p, seed)
        s = normalized_adjacency(g)
        x = g.features
        # dense oracle built from the definition, independent of the CSR path
        adj = np.zeros((n, n))
        for u, v in g.edge_list():
            adj[u, v] = adj[v, u] = 1.0
        dinv = np.diag(1.0 / np.sqrt(adj.sum(1) + 1.0))
        s_dense = dinv @ (adj + np.eye(n)) @ dinv
        expected = np.linalg.matrix_power(s_dense, a + b) @ x
        np.testing.assert_allclose(aggregate_features(s, x, a + b), expected, rtol=0, atol=1e-10)
        np.testing.assert_allclose(aggregate_features(s, aggregate_features(s, x, b), a),
                                   aggregate_features(s, x, a + b), rtol=0, atol=1e-10)


class TestHomophily:
    def test_triangle_same_label(self):
        g = AttributedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], np.zeros((3, 1)), [1, 1, 1])
        assert homophily_ratio(g) == 1.0

    def test_single_edge_different_labels(self):
        g = AttributedGraph.from_edges(2, [(0, 1)], np.zeros((2, 1)), [0, 1])
        assert homophily_ratio(g) == 0.0

    def test_requires_labels(self):
        g = AttributedGraph.from_edges(2, [(0, 1)], np.zeros((2, 1)))
        with pytest.raises(ValueError):
            homophily_ratio(g)


def test_invalid_labels_rejected():
    with pytest.raises(ValueError):
        AttributedGraph.from_edges(2, [(0, 1)], np.zeros((2, 1)), [0, 3], class_count=2)


def test_row_normalize():
    out = row_normalize(np.array([[1.0, 3.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(out, [[0.25, 0.75], [0.0, 0.0]])
