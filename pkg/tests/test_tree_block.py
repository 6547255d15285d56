import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metasurrogate.core import route_all
from metasurrogate.milp import MilpModel, MilpSolution, Status, solve_bnb
from metasurrogate.tree_block import (TreeBlockError, decode_tree, default_eps, emit_tree_block,
                                      leaf_assignment)

from oracles import split_options


def feasible_with_leaves(X, depth, leaves, mask=None) -> bool:
    """Is the block feasible with every leaf indicator fixed?"""
    m = MilpModel("fix")
    block = emit_tree_block(m, X, depth, mask)
    for j, k in enumerate(leaves):
        m.add_constraint({int(block.leaf_vars[k, j]): 1.0}, "==", 1.0)
    return solve_bnb(m).status is Status.OPTIMAL


def test_single_split_separates_two_points():
    X = np.array([[1.0], [2.0]])
    m = MilpModel("two")
    block = emit_tree_block(m, X, 1)
    m.add_constraint({int(block.leaf_vars[0, 0]): 1.0, int(block.leaf_vars[1, 1]): 1.0}, "==", 2)
    lo_t = m.add_var("probe", -10, 10)
    m.add_constraint({lo_t: 1.0, int(block.threshold_vars[0]): -1.0}, "==", 0.0)
    for sense in ("min", "max"):
        m.set_objective({lo_t: 1.0}, sense)
        sol = solve_bnb(m)
        assert sol.status is Status.OPTIMAL
        expected = 1.0 if sense == "min" else 2.0 - block.eps
        assert sol.objective == pytest.approx(expected, abs=1e-7)


def test_identical_rows_share_a_leaf():
    X = np.array([[1.0, 5.0]] * 3)
    for leaves in itertools.product(range(2), repeat=3):
        assert feasible_with_leaves(X, 1, leaves) == (len(set(leaves)) == 1)


def test_constant_features_rejected():
    with pytest.raises(TreeBlockError):
        emit_tree_block(MilpModel(), np.ones((3, 2)), 1)


def test_mask_and_depth_validation():
    X = np.arange(6.0).reshape(3, 2)
    with pytest.raises(TreeBlockError):
        emit_tree_block(MilpModel(), X, 0)
    with pytest.raises(TreeBlockError):
        emit_tree_block(MilpModel(), X, 1, [])
    with pytest.raises(TreeBlockError):
        emit_tree_block(MilpModel(), X, 1, [2])


def test_default_constants():
    X = np.array([[0.0, 10.0], [0.5, 10.0], [2.0, 11.0]])
    assert default_eps(X) == 0.25
    block = emit_tree_block(MilpModel(), X, 1)
    assert block.big_m == pytest.approx(11.0 + 0.25)
    assert default_eps(np.array([[1.0], [1.00001]])) == 1e-4


def test_big_m_below_valid_minimum_rejected():
    with pytest.raises(TreeBlockError):
        emit_tree_block(MilpModel(), np.array([[0.0], [4.0]]), 1, big_m=3.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_depth_one_feasible_assignments_are_exactly_the_threshold_splits(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(4, 2)).astype(float)
    if X.min() == X.max():
        return
    realizable = {tuple(r.astype(int)) for r in split_options(X)}
    for leaves in itertools.product(range(2), repeat=4):
        # a split sends rows with larger values right; all-right needs b < min value
        expected = leaves in realizable or all(leaves)
        assert feasible_with_leaves(X, 1, leaves) == expected


def test_hand_built_solution_decodes_to_its_query():
    X = np.array([[4.0, 1.0], [6.0, 1.0]])
    m = MilpModel("hand")
    block = emit_tree_block(m, X, 1)
    x = np.zeros(m.n_vars)
    x[block.leaf_vars[0, 0]] = 1
    x[block.leaf_vars[1, 1]] = 1
    x[block.select_vars[0, 0]] = 1
    x[block.threshold_vars[0]] = 5.0
    assert m.max_violation(x) <= 1e-9
    sol = MilpSolution(Status.OPTIMAL, x, 0.0, 0.0, 0.0)
    tree = decode_tree(block, sol, ["left", "right"])
    assert [(q.feature, q.threshold) for q in tree.queries] == [(0, 5.0)]


def test_all_rows_in_first_leaf_route_left():
    X = np.array([[1.0, 3.0], [2.0, 0.0], [7.0, 5.0]])
    m = MilpModel("left")
    block = emit_tree_block(m, X, 2)
    for j in range(3):
        m.add_constraint({int(block.leaf_vars[0, j]): 1.0}, "==", 1.0)
    sol = solve_bnb(m)
    tree = decode_tree(block, sol, list(range(4)))
    assert list(route_all(tree, X)) == [0, 0, 0]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2))
def test_decoded_tree_routes_like_the_leaf_indicators(seed, depth):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(4, 3)).round(2)
    if X.min() == X.max():
        return
    m = MilpModel("rand", "max")
    block = emit_tree_block(m, X, depth)
    weights = rng.normal(size=block.leaf_vars.shape)
    m.set_objective({int(v): float(w) for v, w in zip(block.leaf_vars.ravel(), weights.ravel())})
    sol = solve_bnb(m)
    assigned = leaf_assignment(block, sol)
    assert (np.round(sol.values[block.leaf_vars]).sum(axis=0) == 1).all()
    tree = decode_tree(block, sol, list(range(2 ** depth)))
    assert (route_all(tree, X) == assigned).all()
    for q in tree.queries:
        assert X.min() - block.eps - 1e-9 <= q.threshold <= X.max() + 1e-9


def test_expressiveness_grows_with_depth():
    # any depth-1 assignment is reproducible at depth 2 with leaves 0 and 2
    X = np.array([[0.0], [1.0], [2.0]])
    assert feasible_with_leaves(X, 1, [0, 1, 1])
    assert feasible_with_leaves(X, 2, [0, 2, 2])
