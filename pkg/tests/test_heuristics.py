import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metasurrogate.core import MAX, ScenarioSet, SurrogateTree, route_all
from metasurrogate.experiments import gen_cost_scenarios, gen_grid, gen_knapsack
from metasurrogate.heuristics import (SelectionInfeasible, best_single_meta, best_single_micro,
                                      candidate_matrix, enumeration_size, fit_classifier,
                                      learn_heuristic, m2m, solve_selection_ip, split_partitions,
                                      train_micro, tree_objective)
from metasurrogate.knapsack import KnapsackProblem
from metasurrogate.shortest_path import ShortestPathProblem

from oracles import split_options


def knapsack_case(seed, n=8, cats=2, n_scen=6):
    inst = gen_knapsack(n, cats, seed)
    P = gen_cost_scenarios(n, n_scen, seed)
    return KnapsackProblem(inst), ScenarioSet(P, P)


def grid_case(seed, n_scen=5):
    graph = gen_grid(4, 4)
    C = gen_cost_scenarios(graph.n_edges, n_scen, seed)
    return ShortestPathProblem(graph), ScenarioSet(C, C)


def test_selection_two_by_two():
    M = np.array([[1.0, 9.0], [9.0, 1.0]])
    assert solve_selection_ip(M, 1).objective == 10
    assert solve_selection_ip(M, 2).objective == 2


def test_selection_maximization_flips():
    M = np.array([[1.0, 9.0], [9.0, 1.0]])
    assert solve_selection_ip(M, 1, MAX).objective == 10
    assert solve_selection_ip(M, 2, MAX).objective == 18


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5), st.integers(2, 6))
def test_selection_against_column_subsets(seed, n_cand, n_scen):
    rng = np.random.default_rng(seed)
    M = rng.integers(0, 20, size=(n_cand, n_scen)).astype(float)
    for k in range(1, n_cand + 1):
        expected = min(M[list(s)].min(axis=0).sum()
                       for s in itertools.combinations(range(n_cand), k))
        sel = solve_selection_ip(M, k)
        assert sel.objective == pytest.approx(expected)
        assert len(sel.selected) <= k
    assert solve_selection_ip(M, n_cand).objective == pytest.approx(M.min(axis=0).sum())


def test_selection_single_candidate_is_best_row():
    M = np.array([[3.0, 4.0, 6.0], [1.0, 1.0, 11.0], [4.0, 4.0, 4.0]])
    sel = solve_selection_ip(M, 1)
    assert sel.selected == [2] and sel.objective == 12


def test_selection_respects_infeasible_markers():
    M = np.array([[np.inf, 2.0], [5.0, np.inf]])
    sel = solve_selection_ip(M, 2)
    assert list(sel.assignment) == [1, 0] and sel.objective == 7
    with pytest.raises(SelectionInfeasible):
        solve_selection_ip(np.array([[np.inf, 1.0]]), 1)


def test_classifier_single_label_has_no_queries():
    tree = fit_classifier(np.arange(8.0).reshape(4, 2), [3, 3, 3, 3], 2)
    assert tree.depth == 0 and tree.leaves == (3,)


def test_classifier_separable_labels_split_at_midpoint():
    X = np.array([[1.0], [2.0], [4.0], [6.0]])
    tree = fit_classifier(X, [0, 0, 1, 1], 1)
    assert [(q.feature, q.threshold) for q in tree.queries] == [(0, 3.0)]
    assert tree.leaves == (0, 1)


def test_classifier_xor_at_depth_one():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    tree = fit_classifier(X, y, 1)
    pred = np.array(tree.leaves)[route_all(tree, X)]
    assert (pred == y).mean() >= 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 3))
def test_classifier_is_deterministic_and_complete(seed, depth):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(12, 3)).astype(float)
    y = rng.integers(0, 4, size=12)
    a, b = fit_classifier(X, y, depth), fit_classifier(X, y, depth)
    assert a == b and a.depth <= depth
    assert set(a.leaves) <= set(y.tolist())


def test_candidate_matrix_diagonal_is_the_nominal_optimum():
    for problem, scen in (knapsack_case(1), grid_case(1)):
        cands, M, source = candidate_matrix(problem, scen)
        nominal = problem.nominal_values(scen.costs)
        assert np.allclose(M[source, np.arange(len(scen))], nominal)
        best = M.max(axis=0) if problem.sense == MAX else M.min(axis=0)
        assert np.allclose(best, nominal)


@pytest.mark.parametrize("case", [knapsack_case, grid_case])
def test_lh_assignment_beats_any_single_candidate(case):
    problem, scen = case(2)
    lh = learn_heuristic(problem, scen, 1)
    _, M, _ = candidate_matrix(problem, scen)
    assignment = lh.extra["assignment_objective"]    # probability weighted
    if problem.sense == MAX:
        assert assignment >= M.mean(axis=1).max() - 1e-9
    else:
        assert assignment <= M.mean(axis=1).min() + 1e-9


@pytest.mark.parametrize("case", [knapsack_case, grid_case])
def test_lh_selection_with_all_leaves_reaches_opt(case):
    problem, scen = case(3, n_scen=4)
    lh = learn_heuristic(problem, scen, 2)
    assert lh.extra["assignment_objective"] == pytest.approx(
        problem.nominal_values(scen.costs).mean())


@pytest.mark.parametrize("case", [knapsack_case, grid_case])
def test_m2m_dominates_its_micro_tree(case):
    problem, scen = case(4)
    micro = train_micro(problem, scen, 1)
    tree = m2m(problem, scen, 1, micro=micro).tree
    value = tree_objective(problem, tree, scen)
    micro_value = tree_objective(problem, micro.tree, scen)
    assert micro_value == pytest.approx(micro.objective)
    if problem.sense == MAX:
        assert value >= micro_value - 1e-6
    else:
        assert value <= micro_value + 1e-6


def test_micro1_of_identical_scenarios_is_nominal():
    problem, scen = knapsack_case(5, n_scen=1)
    twice = ScenarioSet(np.vstack([scen.features] * 2), np.vstack([scen.costs] * 2))
    base = best_single_micro(problem, twice)
    assert tree_objective(problem, base.tree, twice) == pytest.approx(
        problem.nominal(scen.costs[0])[1])


@pytest.mark.parametrize("case", [knapsack_case, grid_case])
@pytest.mark.parametrize("depth", [1, 2])
def test_micro_enumeration_agrees_with_the_model(case, depth):
    problem, scen = case(6, n_scen=4)
    a = train_micro(problem, scen, depth, strategy="enumerate")
    b = train_micro(problem, scen, depth, strategy="mip")
    assert a.objective == pytest.approx(b.objective, abs=1e-6)
    assert tree_objective(problem, a.tree, scen) == pytest.approx(a.objective)


def test_split_partitions_cover_every_threshold_partition():
    rng = np.random.default_rng(7)
    X = rng.integers(0, 3, size=(5, 2)).astype(float)
    found = {tuple(X[:, f] > t) for f, t in split_partitions(X)}
    wanted = {tuple(r) for r in split_options(X)}
    # a partition and its complement describe the same pair of leaves
    def canon(p):
        return min(p, tuple(not v for v in p))
    assert {canon(p) for p in found} == {canon(p) for p in wanted}
    assert enumeration_size(ScenarioSet(X, X), 2) == len(split_partitions(X)) * (
        len(split_partitions(X)) + 1) // 2


def test_lh_tree_respects_the_feature_mask():
    problem, scen = knapsack_case(8)
    tree = learn_heuristic(problem, scen, 2, feature_mask=[1, 3]).tree
    assert all(q.feature in (1, 3) for q in tree.queries)


def test_meta1_with_one_category_spends_the_whole_budget():
    inst = gen_knapsack(6, 1, 2)
    P = gen_cost_scenarios(6, 4, 2)
    scen = ScenarioSet(P, P)
    problem = KnapsackProblem(inst)
    leaf = best_single_meta(problem, scen).tree.leaves[0]
    assert tree_objective(problem, SurrogateTree((), (leaf,)), scen) == pytest.approx(
        problem.nominal_values(P).mean())
