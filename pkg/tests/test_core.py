import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metasurrogate.core import (DegenerateScale, DistrictSequence, KnapsackBudgets, NodePath, Query,
                                ScenarioSet, SurrogateTree, aggregate, right_leaves, route,
                                route_all, scaled_objective)


def two_level_tree():
    # features (f=1, b=5) then (f=2, b=3), written 0-based
    return SurrogateTree((Query(0, 5.0), Query(1, 3.0)), ("a", "b", "c", "d"))


def test_route_both_left():
    assert route(two_level_tree(), [4, 2]) == 0


def test_route_right_at_root_reaches_third_leaf():
    assert route(two_level_tree(), [6, 2]) == 2


def test_route_depth_zero_is_single_leaf():
    tree = SurrogateTree((), ("only",))
    assert route(tree, [1e9, -3]) == 0


def test_route_tie_goes_left():
    assert route(two_level_tree(), [5.0, 3.0]) == 0


def test_route_dimension_mismatch():
    with pytest.raises(ValueError):
        route(two_level_tree(), [1.0])


def test_right_leaf_sets_for_depth_two():
    # {3,4} and {2,4} in 1-based numbering
    assert right_leaves(2, 0) == [2, 3]
    assert right_leaves(2, 1) == [1, 3]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.floats(-5, 5)), min_size=0, max_size=4),
       st.lists(st.lists(st.floats(-10, 10), min_size=3, max_size=3), min_size=1, max_size=20))
def test_route_is_total_and_matches_bulk_routing(queries, rows):
    tree = SurrogateTree(tuple(Query(f, t) for f, t in queries), tuple(range(2 ** len(queries))))
    X = np.array(rows)
    bulk = route_all(tree, X)
    for x, k in zip(X, bulk):
        single = route(tree, x)
        assert 0 <= single < tree.n_leaves
        assert single == k
        # leaf bits agree with each threshold comparison
        for q, query in enumerate(tree.queries):
            bit = (single >> (tree.depth - 1 - q)) & 1
            assert bit == int(x[query.feature] > query.threshold)


def test_aggregate_examples():
    assert aggregate("laplace", [2, 4], [0.5, 0.5]) == 3
    assert aggregate("robust", [2, 4], sense="min") == 4
    assert aggregate("robust", [2, 4], sense="max") == 2
    assert aggregate("laplace", [7.5], [1.0]) == 7.5


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate("laplace", [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=8), st.floats(-10, 10),
       st.floats(0, 5))
def test_aggregate_laplace_linear_and_robust_monotone(values, scale, bump):
    v = np.array(values)
    a = aggregate("laplace", v)
    assert math.isclose(aggregate("laplace", scale * v), scale * a, rel_tol=1e-9, abs_tol=1e-7)
    bumped = v.copy()
    bumped[0] += bump
    assert aggregate("robust", bumped, sense="min") >= aggregate("robust", v, sense="min")


def test_scaled_objective_examples():
    assert scaled_objective(10, 5, 10) == 1.0
    assert scaled_objective(5, 5, 10) == 0.0
    assert math.isclose(scaled_objective(7, 5, 10), 0.4)


def test_scaled_objective_anchor_is_positive_zero_for_minimization():
    # (5 - 5) / (3 - 5) would be -0.0 without normalisation
    value = scaled_objective(5.0, 5.0, 3.0)
    assert value == 0.0 and math.copysign(1.0, value) == 1.0


def test_scaled_objective_degenerate():
    with pytest.raises(DegenerateScale):
        scaled_objective(3, 4, 4)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_scaled_objective_order_preserving(a, b, lo, hi):
    if abs(hi - lo) < 1e-6:
        return
    sa, sb = scaled_objective(a, lo, hi), scaled_objective(b, lo, hi)
    better_a = a > b if hi > lo else a < b
    if better_a:
        assert sa >= sb


def test_scenarioset_defaults_to_uniform_probabilities():
    s = ScenarioSet(np.ones((4, 2)), np.ones((4, 3)))
    assert np.allclose(s.probabilities, 0.25)
    assert s.n_features == 2 and len(s) == 4


def test_scenarioset_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        ScenarioSet(np.ones((2, 1)), np.ones((2, 1)), [0.7, 0.7])
    with pytest.raises(ValueError):
        ScenarioSet(np.ones((2, 1)), np.ones((3, 1)))


def test_district_sequence_rejects_immediate_repeat_and_empty():
    with pytest.raises(ValueError):
        DistrictSequence([1, 1, 2])
    with pytest.raises(ValueError):
        DistrictSequence([])
    assert DistrictSequence([1, 2, 1]).districts == (1, 2, 1)


def test_tree_json_round_trip(tmp_path):
    tree = SurrogateTree((Query(3, 0.25),), (KnapsackBudgets([1, 2]), DistrictSequence([0, 4])),
                         {"method": "lh"})
    path = tmp_path / "tree.json"
    tree.save(path)
    back = SurrogateTree.load(path)
    assert back == tree
    doc = tree.to_dict()
    assert set(doc) >= {"depth", "queries", "leaves"}
    assert doc["queries"] == [{"feature": 3, "threshold": 0.25}]
    assert SurrogateTree.from_dict({"depth": 0, "queries": [], "leaves": [{"path": [1, 2]}]}
                                   ).leaves == (NodePath((1, 2)),)


def test_tree_leaf_count_must_match_depth():
    with pytest.raises(ValueError):
        SurrogateTree((Query(0, 1.0),), ("a",))
