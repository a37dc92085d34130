import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import softmax as sp_softmax
from scipy.stats import entropy as sp_entropy

from graphpart.gcn import TrainConfig
from graphpart.graph import AttributedGraph
from graphpart.partition import Partition, build_partition
from graphpart.selection import (STRATEGIES, GraphContext, budget_plan, default_gamma, degree_select,
                                 density_scores, entropy_scores, age_scores, age_select,
                                 featprop_select, graphpart_select, graphpartfar_select, initial_size,
                                 kcenter_greedy_select, load_selected, objective_eval, pagerank,
                                 pagerank_select, percentiles, random_select, select_nodes,
                                 single_partition, uncertainty_select)
from graphpart.synthetic import planted_partition

from conftest import graph_from_nx, random_graph


def part(assignment):
    a = np.asarray(assignment, dtype=np.int64)
    return Partition(a, int(a.max()) + 1, 0.0)


def brute_objective(features, assignment, s_tr):
    total = 0.0
    for i in range(len(features)):
        same = [j for j in s_tr if assignment[j] == assignment[i]] or list(s_tr)
        total += min(float(np.sqrt(np.sum((features[i] - features[j]) ** 2))) for j in same)
    return total


class TestObjective:
    def test_all_selected_is_zero(self):
        x = np.random.default_rng(0).normal(size=(8, 2))
        assert objective_eval(x, part([0, 0, 1, 1, 1, 2, 2, 2]), range(8)) == 0.0

    def test_three_collinear(self):
        assert objective_eval(np.array([[0.0], [1.0], [2.0]]), single_partition(3), [1]) == 2.0

    def test_uncovered_part_falls_back(self):
        x = np.array([[0.0], [1.0], [5.0]])
        total, uncovered = objective_eval(x, part([0, 0, 1]), [0], return_uncovered=True)
        assert uncovered == [1]
        assert total == pytest.approx(6.0)

    def test_empty_training_set(self):
        with pytest.raises(ValueError):
            objective_eval(np.zeros((2, 1)), single_partition(2), [])

    @given(st.integers(1, 10), st.integers(1, 4), st.integers(0, 10_000), st.data())
    @settings(max_examples=80, deadline=None)
    def test_brute_force(self, n, k, seed, data):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(n, 3))
        a = rng.integers(min(k, n), size=n)
        a = np.unique(a, return_inverse=True)[1]
        s_tr = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
        got = objective_eval(x, part(a), s_tr)
        assert abs(got - brute_objective(x, a, sorted(s_tr))) <= 1e-12


class TestBudgetPlan:
    def test_remainder_to_largest(self):
        p = part([0] * 5 + [1] * 3 + [2] * 4)
        plan = budget_plan(p, 5)
        assert plan.order == (0, 2, 1)
        assert plan.per_part == {0: 2, 2: 2, 1: 1}

    def test_capacity_redistribution(self):
        p = part([0] * 10 + [1] * 1 + [2] * 2)
        plan = budget_plan(p, 9)
        assert plan.per_part[1] == 1 and plan.per_part[2] == 2
        assert sum(plan.per_part.values()) == 9

    def test_seed_set_reduces_capacity(self):
        p = part([0, 0, 1, 1])
        plan = budget_plan(p, 2, seed_set=[0])
        assert plan.per_part == {0: 1, 1: 1}
        with pytest.raises(ValueError):
            budget_plan(p, 4, seed_set=[0])

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=40), st.data())
    @settings(max_examples=80, deadline=None)
    def test_invariants(self, raw, data):
        a = np.unique(raw, return_inverse=True)[1]
        p = part(a)
        seeds = data.draw(st.sets(st.integers(0, len(a) - 1)))
        free = len(a) - len(seeds)
        b = data.draw(st.integers(0, free))
        plan = budget_plan(p, b, seeds)
        assert sum(plan.per_part.values()) == b
        for k, bk in plan.per_part.items():
            assert 0 <= bk <= sum(1 for i in p.members(k) if i not in seeds)


class TestGraphPart:
    def test_line_medoid(self):
        x = np.array([[0.0], [1.0], [2.0], [10.0]])
        res = graphpart_select(x, single_partition(4), 1, rng=0)
        assert res.selected == [2]
        # brute-force 1-medoid: nodes 1 and 2 both reach the optimum 11
        costs = [np.abs(x - x[j]).sum() for j in range(4)]
        assert costs[2] == min(costs)

    def test_exhaustion(self):
        x = np.random.default_rng(0).normal(size=(12, 2))
        p = part([0] * 5 + [1] * 4 + [2] * 3)
        assert sorted(graphpart_select(x, p, 12, rng=1).selected) == list(range(12))

    def test_respects_seed_set(self):
        x = np.random.default_rng(1).normal(size=(20, 2))
        p = part([0] * 10 + [1] * 10)
        res = graphpart_select(x, p, 8, seed_set=[0, 1, 12], rng=3)
        assert not set(res.selected) & {0, 1, 12}
        assert len(set(res.selected)) == 8

    def test_per_part_counts(self):
        x = np.random.default_rng(2).normal(size=(30, 3))
        p = part([0] * 12 + [1] * 10 + [2] * 8)
        res = graphpart_select(x, p, 7, rng=0)
        counts = np.bincount(p.assignment[res.selected], minlength=3)
        assert counts.tolist() == [3, 2, 2]

    @pytest.mark.parametrize("seed", range(5))
    def test_k1_identical_to_featprop(self, seed):
        x = np.random.default_rng(seed).normal(size=(60, 4))
        a = graphpart_select(x, single_partition(60), 9, rng=seed).selected
        b = featprop_select(x, 9, rng=seed).selected
        assert a == b

    def test_featprop_all_nodes(self):
        x = np.random.default_rng(0).normal(size=(7, 2))
        assert sorted(featprop_select(x, 7, rng=0).selected) == list(range(7))
        with pytest.raises(ValueError):
            featprop_select(x, 8)

    def test_budget_overflow(self):
        with pytest.raises(ValueError):
            graphpart_select(np.zeros((3, 1)), single_partition(3), 4)

    @pytest.mark.parametrize("seed", range(30))
    def test_medoid_within_twice_optimum(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 13))
        b = int(rng.integers(1, 4))
        x = rng.normal(size=(n, 2))
        got = objective_eval(x, single_partition(n), graphpart_select(x, single_partition(n), b, rng=seed).selected)
        best = min(objective_eval(x, single_partition(n), c) for c in itertools.combinations(range(n), b))
        assert got <= 2.0 * best + 1e-12


class TestGraphPartFar:
    def overlapping(self):
        x = np.array([[0.0], [0.1], [-0.1], [0.0], [0.05], [0.7]])
        return x, part([0, 0, 0, 1, 1, 1])

    def test_first_pick_matches_graphpart(self):
        x, p = self.overlapping()
        near = graphpart_select(x, p, 2, rng=0).selected
        far = graphpartfar_select(x, p, 2, rng=0).selected
        assert far[0] == near[0] == 0

    def test_second_part_pushed_away(self):
        x, p = self.overlapping()
        near = graphpart_select(x, p, 2, rng=0).selected
        far = graphpartfar_select(x, p, 2, rng=0).selected
        assert near[1] == 4 and far[1] == 5
        dist = lambda v: abs(x[v, 0] - x[near[0], 0])  # noqa: E731
        assert dist(far[1]) > dist(near[1])

    @pytest.mark.parametrize("seed", range(5))
    def test_previous_scope_first_part_identical(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(40, 3))
        p = part([0] * 20 + [1] * 12 + [2] * 8)
        near = graphpart_select(x, p, 9, rng=seed).selected
        far = graphpartfar_select(x, p, 9, rng=seed, penalty_scope="previous").selected
        plan = budget_plan(p, 9)
        first = plan.per_part[plan.order[0]]
        assert far[:first] == near[:first]

    def test_infinitely_far_selected_node_is_ignored(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(12, 2))
        p1 = part([0] * 6 + [1] * 5 + [2])
        p2 = part([0] * 6 + [1] * 5 + [2, 2])
        x2 = np.vstack([base, [[1e12, 1e12]]])
        a = graphpartfar_select(base, p1, 2, seed_set=[11], rng=5).selected
        b = graphpartfar_select(x2, p2, 2, seed_set=[11, 12], rng=5).selected
        assert a == b

    def test_bad_scope(self):
        with pytest.raises(ValueError):
            graphpartfar_select(np.zeros((3, 1)), single_partition(3), 1, penalty_scope="mine")


class TestCentrality:
    def test_star_degree(self):
        g = graph_from_nx(nx.star_graph(6))
        assert degree_select(g, 1).selected == [0]

    def test_cycle_pagerank_uniform(self):
        g = graph_from_nx(nx.cycle_graph(9))
        np.testing.assert_allclose(pagerank(g), np.full(9, 1 / 9), rtol=0, atol=1e-12)
        assert pagerank_select(g, 3).selected == [0, 1, 2]

    @pytest.mark.parametrize("seed", range(20))
    def test_pagerank_dense_oracle(self, seed):
        g = random_graph(50, 0.06, seed)
        n = g.n
        adj = np.zeros((n, n))
        for u, v in g.edge_list():
            adj[u, v] = adj[v, u] = 1.0
        deg = adj.sum(1)
        # column-stochastic transition with uniform jumps from dangling nodes
        trans = np.where(deg[None, :] > 0, adj / np.where(deg > 0, deg, 1)[None, :], 1.0 / n)
        google = 0.85 * trans + 0.15 / n
        x = np.full(n, 1.0 / n)
        for _ in range(5000):
            x = google @ x
        assert np.abs(pagerank(g) - x).sum() < 1e-8


class TestModelBased:
    def test_kcenter_line(self):
        x = np.array([[0.0], [1.0], [9.0]])
        assert kcenter_greedy_select(x, 2, seed_set=[0]).selected == [2, 1]

    def test_kcenter_identical_points(self):
        x = np.zeros((5, 2))
        assert kcenter_greedy_select(x, 3, seed_set=[1]).selected == [0, 2, 3]

    @pytest.mark.parametrize("seed", range(20))
    def test_kcenter_two_approx(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 11))
        b = int(rng.integers(1, n))
        x = rng.normal(size=(n, 2))
        radius = lambda s: float(np.max(np.min(np.linalg.norm(x[:, None] - x[list(s)][None], axis=2), axis=1)))  # noqa: E731
        got = kcenter_greedy_select(x, b, rng=seed).selected
        best = min(radius(c) for c in itertools.combinations(range(n), b))
        assert radius(got) <= 2.0 * best + 1e-12

    def test_density_scores(self):
        assert np.all(density_scores(np.ones((5, 3)), 2) == 1.0)
        x = np.array([[0.0], [1.0], [3.0]])
        s = density_scores(x, 1)
        assert s[1] == pytest.approx(1.0 / (1.0 + 1 / 3))
        assert s[1] > s[0] > s[2]

    def test_entropy_oracle(self):
        logits = np.random.default_rng(0).normal(scale=3, size=(200, 5))
        ref = sp_entropy(sp_softmax(logits, axis=1), axis=1)
        np.testing.assert_allclose(entropy_scores(logits), ref, rtol=0, atol=1e-12)
        assert entropy_scores(np.zeros((1, 4)))[0] == pytest.approx(np.log(4), abs=1e-15)

    def test_uncertainty_prefers_uniform(self):
        logits = np.array([[50.0, 0, 0], [0, 0, 0], [0, 30.0, 0], [0.1, 0, 0]])
        assert uncertainty_select(logits, 2).selected == [1, 3]

    def test_percentiles(self):
        np.testing.assert_array_equal(percentiles(np.array([3.0, 1.0, 2.0, 2.0])), [0.75, 0.0, 0.25, 0.25])

    def test_age_extremes(self):
        rng = np.random.default_rng(3)
        n = 30
        cent, reps, logits = rng.random(n), rng.normal(size=(n, 4)), rng.normal(size=(n, 3))
        seeds = [0, 5]
        cand = np.setdiff1d(np.arange(n), seeds)
        top_pr = cand[np.lexsort((cand, -cent[cand]))][:6].tolist()
        assert age_select(cent, reps, logits, 6, seeds, 1.0, 3, rng=0).selected == top_pr
        dens = density_scores(reps, 3, 0)
        ent = entropy_scores(logits)
        combo = percentiles(dens[cand]) + percentiles(ent[cand])
        expected = cand[np.lexsort((cand, -combo))][:6].tolist()
        assert age_select(cent, reps, logits, 6, seeds, 0.0, 3, rng=0).selected == expected

    def test_age_dominance(self):
        c = np.array([0.1, 0.9, 0.3])
        d = np.array([0.2, 0.8, 0.5])
        e = np.array([0.0, 1.0, 0.4])
        assert int(np.argmax(age_scores(c, d, e, 0.5))) == 1

    def test_default_gamma(self):
        assert [default_gamma(s) for s in ("cora", "Citeseer", "pubmed", "x")] == [0.7, 0.3, 0.9, 0.8]


class TestRandom:
    def test_complement(self):
        assert sorted(random_select(6, 4, [1, 3], rng=0).selected) == [0, 2, 4, 5]

    def test_deterministic(self):
        assert random_select(100, 10, rng=4).selected == random_select(100, 10, rng=4).selected

    def test_overflow(self):
        with pytest.raises(ValueError):
            random_select(5, 5, [0])


@pytest.fixture(scope="module")
def planted_ctx():
    g = planted_partition(n=90, clusters=3, p_in=0.15, p_out=0.01, d=8, seed=2)
    ctx = GraphContext.build(g)
    ctx.partition, _, _ = build_partition(g, ctx.aggregated)
    return ctx


@pytest.mark.parametrize("strategy", STRATEGIES)
@pytest.mark.parametrize("budget", [1, 2, 7])
def test_every_strategy_invariants(planted_ctx, strategy, budget):
    cfg = TrainConfig(epochs=15)
    a = select_nodes(planted_ctx, strategy, budget, seed=3, cfg=cfg)
    b = select_nodes(planted_ctx, strategy, budget, seed=3, cfg=cfg)
    assert len(a.selected) == budget
    assert len(set(a.selected)) == budget
    assert all(0 <= i < planted_ctx.graph.n for i in a.selected)
    assert a.selected == b.selected
    if strategy in ("density", "uncertainty", "coreset", "age"):
        assert a.info["initial"] == initial_size(budget)


@pytest.mark.parametrize("representation", ["embedding", "feature"])
def test_representations(planted_ctx, representation):
    sel = select_nodes(planted_ctx, "graphpart", 9, seed=1, representation=representation,
                       cfg=TrainConfig(epochs=10))
    assert len(set(sel.selected)) == 9 and sel.representation == representation


def test_select_errors(planted_ctx):
    with pytest.raises(ValueError):
        select_nodes(planted_ctx, "nope", 3)
    with pytest.raises(ValueError):
        select_nodes(planted_ctx, "random", 3, representation="nope")
    with pytest.raises(ValueError):
        select_nodes(planted_ctx, "random", 10_000)


def test_selected_file_roundtrip(tmp_path):
    res = random_select(30, 5, rng=2)
    res.save(tmp_path / "selected.txt")
    assert load_selected(tmp_path / "selected.txt") == res.selected


@pytest.mark.slow
def test_graphpart_beats_random_objective():
    wins = 0
    for seed in range(100):
        g = planted_partition(n=200, clusters=4, seed=seed)
        ctx = GraphContext.build(g)
        p, _, _ = build_partition(g, ctx.aggregated)
        gp = graphpart_select(ctx.aggregated, p, 8, rng=seed).selected
        rd = random_select(g.n, 8, rng=seed).selected
        wins += objective_eval(ctx.aggregated, p, gp) <= objective_eval(ctx.aggregated, p, rd)
    assert wins >= 90
