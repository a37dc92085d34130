import networkx as nx
import numpy as np
import pytest

from graphpart.graph import AttributedGraph


def graph_from_nx(G, features=None, labels=None, name=""):
    n = G.number_of_nodes()
    feats = np.zeros((n, 1)) if features is None else features
    return AttributedGraph.from_edges(n, list(G.edges()), feats, labels, name=name)


@pytest.fixture
def two_triangles():
    return AttributedGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], np.eye(6))


@pytest.fixture
def karate():
    return graph_from_nx(nx.karate_club_graph())


def random_graph(n, p, seed, d=3, classes=3):
    rng = np.random.default_rng(seed)
    G = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
    return graph_from_nx(G, rng.normal(size=(n, d)), rng.integers(classes, size=n))


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
