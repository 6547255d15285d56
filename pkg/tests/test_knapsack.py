import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metasurrogate.core import ItemSelection, KnapsackBudgets, ScenarioSet, route_all
from metasurrogate.heuristics import (best_single_meta, best_single_micro, evaluate_tree,
                                      train_micro, train_mip, tree_objective)
from metasurrogate.knapsack import (KnapsackInstance, KnapsackProblem, even_categories,
                                    evaluate_meta, load_instance, rescale_budgets, save_instance,
                                    solve_nominal)
from metasurrogate.tree_block import leaf_assignment

from oracles import (budget_value, category_breakpoints, knapsack_by_subsets, split_options,
                     surrogate_oracle)


def random_instance(rng, n, n_cats, n_scen, n_feat=None):
    w = rng.uniform(0.1, 10, size=n).round(2)
    inst = KnapsackInstance(w, 0.5 * w.sum(), even_categories(n, n_cats))
    profits = rng.integers(0, 20, size=(n_scen, n)).astype(float)
    feats = profits if n_feat is None else rng.normal(size=(n_scen, n_feat)).round(2)
    return inst, ScenarioSet(feats, profits)


def test_nominal_two_items_picks_the_better_one():
    inst = KnapsackInstance([2, 2], 3, [[0, 1]])
    sel, value = solve_nominal(inst, [3, 2])
    assert list(sel.items) == [1, 0] and value == 3


def test_nominal_takes_everything_when_it_fits():
    inst = KnapsackInstance([1, 2, 3], 6, [[0, 1, 2]])
    sel, value = solve_nominal(inst, [1, 1, 1])
    assert list(sel.items) == [1, 1, 1] and value == 3


def test_nominal_empty_when_nothing_fits():
    inst = KnapsackInstance([4, 5], 3, [[0, 1]])
    sel, value = solve_nominal(inst, [7, 9])
    assert not any(sel.items) and value == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_nominal_matches_subset_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    inst, scen = random_instance(rng, n, 1, 1)
    _, value = solve_nominal(inst, scen.costs[0])
    expected, _ = knapsack_by_subsets(scen.costs[0], inst.weights, inst.capacity)
    assert math.isclose(value, expected, abs_tol=1e-9)


def test_single_category_full_budget_is_the_nominal_problem():
    rng = np.random.default_rng(1)
    inst, scen = random_instance(rng, 7, 1, 5)
    for row in scen.costs:
        assert evaluate_meta(inst, row, KnapsackBudgets([inst.capacity])) == \
            pytest.approx(solve_nominal(inst, row)[1])


def test_zero_budgets_give_zero():
    inst = KnapsackInstance([1, 2, 3, 4], 5, [[0, 1], [2, 3]])
    assert evaluate_meta(inst, [5, 5, 5, 5], KnapsackBudgets([0, 0])) == 0


def test_four_items_two_categories_against_enumeration():
    inst = KnapsackInstance([1.5, 2.0, 2.5, 1.0], 4.0, [[0, 1], [2, 3]])
    profits = [4.0, 5.0, 6.0, 2.0]
    for budgets in [(1.5, 2.5), (2.0, 2.0), (3.5, 0.5), (0.0, 4.0)]:
        # best over all 16 subsets respecting each category budget
        best = 0.0
        for bits in itertools.product((0, 1), repeat=4):
            x = np.array(bits)
            if (x[:2] @ inst.weights[:2] <= budgets[0] and x[2:] @ inst.weights[2:] <= budgets[1]):
                best = max(best, float(x @ profits))
        assert evaluate_meta(inst, profits, KnapsackBudgets(budgets)) == pytest.approx(best)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 2), st.floats(0, 5))
def test_evaluate_meta_monotone_in_each_budget(seed, f, bump):
    rng = np.random.default_rng(seed)
    inst, scen = random_instance(rng, 6, 3, 1)
    b = rng.uniform(0, inst.capacity / 3, size=3)
    raised = b.copy()
    raised[f] += bump
    lo = evaluate_meta(inst, scen.costs[0], KnapsackBudgets(b))
    hi = evaluate_meta(inst, scen.costs[0], KnapsackBudgets(raised))
    assert hi >= lo - 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_proportional_split_never_beats_nominal(seed):
    rng = np.random.default_rng(seed)
    inst, scen = random_instance(rng, 8, 3, 1)
    sizes = np.array([len(c) for c in inst.categories], float)
    meta = KnapsackBudgets(inst.capacity * sizes / sizes.sum())
    assert evaluate_meta(inst, scen.costs[0], meta) <= solve_nominal(inst, scen.costs[0])[1] + 1e-9


def test_rescale_examples():
    assert rescale_budgets(KnapsackBudgets([1, 1]), 6).budgets == (3.0, 3.0)
    assert rescale_budgets(KnapsackBudgets([2, 6]), 4).budgets == (1.0, 3.0)
    assert rescale_budgets(KnapsackBudgets([0, 0]), 4).budgets == (2.0, 2.0)


def test_instance_validation():
    with pytest.raises(ValueError):
        KnapsackInstance([1, 0], 1, [[0, 1]])
    with pytest.raises(ValueError):
        KnapsackInstance([1, 1], 1, [[0], [0]])
    with pytest.raises(ValueError):
        KnapsackInstance([1, 1], 0, [[0, 1]])
    assert even_categories(5, 2) == ((0, 1, 2), (3, 4))


def test_instance_file_round_trip(tmp_path):
    inst, scen = random_instance(np.random.default_rng(2), 5, 2, 3)
    save_instance(tmp_path / "k.json", inst, scen)
    back, scen2 = load_instance(tmp_path / "k.json")
    assert np.array_equal(back.weights, inst.weights) and back.categories == inst.categories
    assert np.array_equal(scen2.costs, scen.costs) and np.array_equal(scen2.features, scen.features)


def test_meta1_is_the_best_single_budget_vector():
    rng = np.random.default_rng(3)
    w = rng.integers(1, 6, size=4).astype(float)
    inst = KnapsackInstance(w, 0.5 * w.sum(), [[0, 1], [2, 3]])
    P = rng.integers(0, 10, size=(3, 4)).astype(float)
    problem = KnapsackProblem(inst)
    result = best_single_meta(problem, ScenarioSet(P, P))
    expected = max(np.mean([budget_value(p, w, inst.categories, b) for p in P])
                   for b in category_breakpoints(w, inst.categories, inst.capacity))
    assert result.objective == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_depth_one_mip_matches_split_and_budget_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    w = rng.integers(1, 6, size=4).astype(float)
    inst = KnapsackInstance(w, 0.5 * w.sum(), [[0, 1], [2, 3]])
    P = rng.integers(0, 10, size=(2, 4)).astype(float)
    result = train_mip(KnapsackProblem(inst), ScenarioSet(P, P), 1)
    expected = surrogate_oracle(P, w, inst.categories, inst.capacity,
                                category_breakpoints(w, inst.categories, inst.capacity))
    assert result.objective == pytest.approx(expected, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2))
def test_decoded_surrogate_routes_like_the_model(seed, depth):
    rng = np.random.default_rng(seed)
    inst, scen = random_instance(rng, 5, 2, 4, n_feat=2)
    problem = KnapsackProblem(inst)
    model, handles = problem.build_meta_mip(scen, depth)
    from metasurrogate.milp import solve
    sol = solve(model)
    tree = problem.decode_meta(handles, sol, scen)
    assert (route_all(tree, scen.features) == leaf_assignment(handles.block, sol)).all()
    # rescaling only raises budgets, so routed evaluation is at least the model value
    assert tree_objective(problem, tree, scen) >= sol.objective - 1e-6


def test_micro_depth_zero_is_micro1():
    inst, scen = random_instance(np.random.default_rng(4), 6, 2, 5)
    problem = KnapsackProblem(inst)
    micro = train_micro(problem, scen, 0)
    base = best_single_micro(problem, scen)
    assert micro.objective == pytest.approx(tree_objective(problem, base.tree, scen))


def micro_oracle(P, weights, capacity) -> float:
    """Best depth-1 micro tree: each side takes its own best subset for the summed profits."""
    best = -math.inf
    for right in split_options(P):
        total = 0.0
        for side in (~right, right):
            if side.any():
                total += knapsack_by_subsets(P[side].sum(axis=0), weights, capacity)[0]
        best = max(best, total / len(P))
    return best


@pytest.mark.parametrize("strategy", ["mip", "enumerate"])
@pytest.mark.parametrize("seed", range(4))
def test_micro_depth_one_matches_enumeration(seed, strategy):
    rng = np.random.default_rng(200 + seed)
    inst, scen = random_instance(rng, 5, 2, 3)
    result = train_micro(KnapsackProblem(inst), scen, 1, strategy=strategy)
    assert result.objective == pytest.approx(micro_oracle(scen.costs, inst.weights, inst.capacity))


def test_micro_with_two_leaves_beats_one_on_disagreeing_scenarios():
    inst = KnapsackInstance([1, 1], 1, [[0, 1]])
    scen = ScenarioSet([[0.0], [1.0]], [[5.0, 0.0], [0.0, 5.0]])
    problem = KnapsackProblem(inst)
    one = train_micro(problem, scen, 0).objective
    two = train_micro(problem, scen, 1).objective
    assert one == pytest.approx(2.5) and two == pytest.approx(5.0)


def test_surrogate_dominates_micro_via_induced_budgets():
    inst, scen = random_instance(np.random.default_rng(5), 6, 2, 4, n_feat=2)
    problem = KnapsackProblem(inst)
    micro = train_micro(problem, scen, 1)
    mip = train_mip(problem, scen, 1)
    # the micro tree with budget leaves is a feasible point of the surrogate model
    assert mip.objective >= micro.objective - 1e-6


def test_one_item_per_category_equals_micro():
    inst, scen = random_instance(np.random.default_rng(6), 4, 4, 4, n_feat=2)
    problem = KnapsackProblem(inst)
    mip = train_mip(problem, scen, 1)
    micro = train_micro(problem, scen, 1)
    assert mip.objective == pytest.approx(micro.objective, abs=1e-6)


def test_sandwich_on_a_small_instance():
    inst, scen = random_instance(np.random.default_rng(7), 8, 2, 6, n_feat=3)
    problem = KnapsackProblem(inst)
    micro1 = tree_objective(problem, best_single_micro(problem, scen).tree, scen)
    values = [micro1] + [tree_objective(problem, train_mip(problem, scen, q).tree, scen)
                         for q in (0, 1, 2)]
    opt = float(np.mean(problem.nominal_values(scen.costs)))
    chain = values + [opt]
    assert all(a <= b + 1e-6 for a, b in zip(chain, chain[1:]))


def test_micro_values_follow_the_item_vector():
    inst = KnapsackInstance([1, 1, 1], 2, [[0, 1, 2]])
    problem = KnapsackProblem(inst)
    sel = ItemSelection([1, 0, 1])
    assert list(problem.micro_value(np.array([[1, 2, 3], [4, 5, 6]]), sel)) == [4, 10]
    tree = best_single_micro(problem, ScenarioSet([[0.0]], [[1, 2, 3]])).tree
    assert list(evaluate_tree(problem, tree, ScenarioSet([[0.0]], [[1, 2, 3]]))) == [5]
