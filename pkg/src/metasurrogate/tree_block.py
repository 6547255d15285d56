"""Symmetric-tree constraint block for MILP surrogate models.

For ``N`` training rows and depth ``Q`` the block adds leaf indicators
``leaf[k, j]``, per-depth feature selectors ``select[f, q]`` and thresholds
``threshold[q]``.  A row is routed to the right child at depth ``q`` exactly
when its selected feature value exceeds the threshold by at least ``eps``;
``big_m`` switches the inactive side of each linking row off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Query, SurrogateTree, right_leaves, route_all
from .milp import MilpModel, MilpSolution

EPS_FLOOR = 1e-4
BINARY_TOL = 1e-4


class TreeBlockError(ValueError):
    pass


@dataclass(frozen=True)
class TreeBlock:
    depth: int
    leaf_vars: np.ndarray        # (K, N) variable indices
    select_vars: np.ndarray      # (len(features), Q) variable indices
    threshold_vars: np.ndarray   # (Q,) variable indices
    features: tuple[int, ...]    # columns of the feature matrix that may be queried
    big_m: float
    eps: float
    feature_matrix: np.ndarray

    @property
    def n_leaves(self) -> int:
        return 2 ** self.depth

    @property
    def n_rows(self) -> int:
        return self.leaf_vars.shape[1]


def default_eps(values: np.ndarray) -> float:
    """Half the smallest positive gap between distinct values of any column."""
    gaps = []
    for col in np.asarray(values, float).T:
        u = np.unique(col)
        if u.size > 1:
            gaps.append(np.min(np.diff(u)))
    if not gaps:
        return EPS_FLOOR
    return max(0.5 * float(min(gaps)), EPS_FLOOR)


def emit_tree_block(model: MilpModel, feature_matrix: np.ndarray, depth: int,
                    feature_mask: Sequence[int] | None = None, eps: float | None = None,
                    big_m: float | None = None, prefix: str = "") -> TreeBlock:
    X = np.asarray(feature_matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise TreeBlockError("feature matrix must be 2-d with at least one row")
    if depth < 1:
        raise TreeBlockError("tree block needs depth >= 1")
    n, n_feat = X.shape
    features = tuple(range(n_feat)) if feature_mask is None else tuple(int(f) for f in feature_mask)
    if not features:
        raise TreeBlockError("feature mask is empty")
    if any(not 0 <= f < n_feat for f in features):
        raise TreeBlockError(f"feature mask {features} out of range for {n_feat} features")
    Xm = X[:, features]
    lo, hi = float(Xm.min()), float(Xm.max())
    if lo == hi:
        raise TreeBlockError(f"all queryable feature values equal {lo}; no threshold can separate rows")
    eps = default_eps(Xm) if eps is None else float(eps)
    if eps <= 0:
        raise TreeBlockError("eps must be positive")
    big_m = (hi - lo) + eps if big_m is None else float(big_m)
    if big_m < (hi - lo) + eps:
        raise TreeBlockError(f"big-M {big_m} below the valid minimum {(hi - lo) + eps}")

    K = 2 ** depth
    leaf = np.array([[model.add_binary(f"{prefix}leaf_{k}_{j}") for j in range(n)]
                     for k in range(K)], dtype=np.int64)
    select = np.array([[model.add_binary(f"{prefix}sel_{f}_{q}") for q in range(depth)]
                       for f in features], dtype=np.int64)
    thr = np.array([model.add_var(f"{prefix}thr_{q}", lo - eps, hi) for q in range(depth)],
                   dtype=np.int64)

    for j in range(n):
        model.add_constraint({int(leaf[k, j]): 1.0 for k in range(K)}, "==", 1.0,
                             f"{prefix}oneleaf_{j}")
    for q in range(depth):
        model.add_constraint({int(select[i, q]): 1.0 for i in range(len(features))}, "==", 1.0,
                             f"{prefix}onefeat_{q}")
    for q in range(depth):
        right = right_leaves(depth, q)
        for j in range(n):
            # selected value <= threshold unless routed right
            terms = [(int(select[i, q]), Xm[j, i]) for i in range(len(features))]
            terms.append((int(thr[q]), -1.0))
            terms += [(int(leaf[k, j]), -big_m) for k in right]
            model.add_constraint(terms, "<=", 0.0, f"{prefix}left_{q}_{j}")
            # threshold + eps <= selected value if routed right
            terms = [(int(select[i, q]), -Xm[j, i]) for i in range(len(features))]
            terms.append((int(thr[q]), 1.0))
            terms += [(int(leaf[k, j]), big_m) for k in right]
            model.add_constraint(terms, "<=", big_m - eps, f"{prefix}right_{q}_{j}")
    return TreeBlock(depth, leaf, select, thr, features, big_m, eps, X)


def _binary(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(np.abs(values - np.round(values)) > BINARY_TOL):
        raise TreeBlockError(f"fractional {what} values in solution")
    return np.round(values).astype(int)


def leaf_assignment(block: TreeBlock, solution: MilpSolution) -> np.ndarray:
    """Leaf index of every training row according to the leaf indicators."""
    ell = _binary(solution.values[block.leaf_vars], "leaf indicator")
    if np.any(ell.sum(axis=0) != 1):
        raise TreeBlockError("a training row is not assigned to exactly one leaf")
    return np.argmax(ell, axis=0)


def decode_tree(block: TreeBlock, solution: MilpSolution, leaves: Sequence) -> SurrogateTree:
    """Read queries from a solved block and attach ``leaves``.

    A threshold that disagrees with the leaf indicators only because of solver
    tolerances is moved to the midpoint of the separating gap.
    """
    assigned = leaf_assignment(block, solution)
    sel = _binary(solution.values[block.select_vars], "feature selector")
    X = block.feature_matrix
    queries = []
    for q in range(block.depth):
        chosen = np.flatnonzero(sel[:, q])
        if chosen.size != 1:
            raise TreeBlockError(f"depth {q} selects {chosen.size} features")
        f = block.features[int(chosen[0])]
        b = float(solution.values[block.threshold_vars[q]])
        goes_right = (assigned >> (block.depth - 1 - q)) & 1 == 1
        v = X[:, f]
        left_max = v[~goes_right].max() if (~goes_right).any() else -np.inf
        right_min = v[goes_right].min() if goes_right.any() else np.inf
        if not (left_max <= b < right_min):
            if left_max >= right_min:
                raise TreeBlockError(f"depth {q}: leaf indicators contradict feature {f}")
            if np.isinf(left_max):
                b = right_min - block.eps
            elif np.isinf(right_min):
                b = left_max
            else:
                b = 0.5 * (left_max + right_min)
        queries.append(Query(f, b))
    tree = SurrogateTree(tuple(queries), tuple(leaves))
    if np.any(route_all(tree, X) != assigned):
        raise TreeBlockError("decoded tree does not reproduce the leaf assignment")
    return tree
