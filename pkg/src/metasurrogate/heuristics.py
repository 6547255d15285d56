"""Training methods for surrogate trees and the single-solution baselines.

Every method takes a *problem adapter* (``KnapsackProblem`` or
``ShortestPathProblem``) that knows how to solve nominal instances, extract
and evaluate meta-solutions, and build the exact MILP models.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (MAX, MIN, Criterion, ItemSelection, NodePath, ScenarioSet, SurrogateTree,
                   aggregate, route_all)
from .milp import MilpModel, SolverOptions, Status, solve

MICRO_TYPES = (ItemSelection, NodePath)


class TrainingError(RuntimeError):
    """A training method could not produce a tree."""


@dataclass
class TrainResult:
    tree: SurrogateTree
    status: str
    seconds: float
    objective: float = math.nan      # model objective when an exact model was solved
    bound: float = math.nan
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# evaluation


def evaluate_tree(problem, tree: SurrogateTree, scenarios: ScenarioSet) -> np.ndarray:
    """Objective value of every scenario when routed through ``tree``."""
    leaf_of = route_all(tree, scenarios.features)
    values = np.empty(len(scenarios))
    for k in np.unique(leaf_of):
        idx = np.flatnonzero(leaf_of == k)
        leaf = tree.leaves[k]
        costs = scenarios.costs[idx]
        if isinstance(leaf, MICRO_TYPES):
            values[idx] = problem.micro_value(costs, leaf)
        else:
            values[idx] = problem.evaluate(costs, leaf)
    return values


def tree_objective(problem, tree: SurrogateTree, scenarios: ScenarioSet,
                   criterion: Criterion = Criterion.LAPLACE) -> float:
    return aggregate(criterion, evaluate_tree(problem, tree, scenarios), scenarios.probabilities,
                     problem.sense)


def opt_values(problem, scenarios: ScenarioSet) -> np.ndarray:
    """Per-scenario optimum (the OPT anchor before aggregation)."""
    return problem.nominal_values(scenarios.costs)


# ---------------------------------------------------------------------------
# selection IP


class SelectionInfeasible(TrainingError):
    pass


@dataclass
class Selection:
    selected: list[int]          # chosen candidate indices
    assignment: np.ndarray       # candidate index per scenario
    objective: float             # sum of assigned entries (sense of the input)


def solve_selection_ip(matrix: np.ndarray, k: int, sense: str = MIN,
                       solver: SolverOptions | None = None,
                       weights: Sequence[float] | None = None) -> Selection:
    """Pick at most ``k`` candidates (rows) and assign every scenario (column) to one.

    ``matrix[i, j]`` is the value of scenario ``j`` under candidate ``i``.
    Infeasible pairs are ``+inf`` (minimization) or ``-inf`` (maximization)
    and enter the model as a penalty ten times larger than any attainable
    total.
    """
    C = np.asarray(matrix, dtype=float)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("selection needs a nonempty candidate matrix")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_cand, n_scen = C.shape
    cost = C if sense == MIN else -C
    bad = ~np.isfinite(cost)
    if np.any(np.isnan(cost)) or np.any(cost[bad] < 0):
        raise ValueError("matrix entries must be finite or the infeasible marker")
    if np.any(bad.all(axis=0)):
        cols = np.flatnonzero(bad.all(axis=0)).tolist()
        raise SelectionInfeasible(f"scenarios {cols} are infeasible under every candidate")
    w = np.ones(n_scen) if weights is None else np.asarray(weights, dtype=float)
    finite = cost[~bad]
    penalty = 10.0 * (n_scen * float(np.abs(finite).max()) + 1.0)
    cost = np.where(bad, penalty, cost) * w[None, :]

    if k >= n_cand:
        assignment = np.argmin(cost, axis=0)
        selected = sorted(set(assignment.tolist()))
    else:
        model = MilpModel("selection", MIN)
        lam = [model.add_binary(f"pick_{i}") for i in range(n_cand)]
        mu = [[model.add_binary(f"assign_{i}_{j}") for j in range(n_scen)] for i in range(n_cand)]
        for j in range(n_scen):
            model.add_constraint([(mu[i][j], 1.0) for i in range(n_cand)], "==", 1.0)
        for i in range(n_cand):
            for j in range(n_scen):
                model.add_constraint({mu[i][j]: 1.0, lam[i]: -1.0}, "<=", 0.0)
        model.add_constraint([(v, 1.0) for v in lam], "<=", float(k))
        model.set_objective(((mu[i][j], cost[i, j]) for i in range(n_cand)
                             for j in range(n_scen)), MIN)
        sol = solve(model, solver or SolverOptions())
        if not sol.status.has_solution:
            raise SelectionInfeasible(f"selection model ended with status {sol.status.value}")
        picked = [i for i in range(n_cand) if sol[lam[i]] > 0.5]
        # assign each scenario to its best picked candidate (the optimum already does,
        # this removes ties left open by the solver)
        sub = cost[picked]
        assignment = np.array(picked)[np.argmin(sub, axis=0)]
        selected = sorted(set(assignment.tolist()))
    objective = float(sum(C[assignment[j], j] * w[j] for j in range(n_scen)))
    return Selection(selected, assignment, objective)


# ---------------------------------------------------------------------------
# classification tree


def _gini_total(labels: np.ndarray, cells: np.ndarray, n_labels: int) -> float:
    """Size-weighted Gini impurity summed over cells."""
    counts = np.zeros((cells.max() + 1, n_labels))
    np.add.at(counts, (cells, labels), 1.0)
    sizes = counts.sum(axis=1)
    nz = sizes > 0
    return float(np.sum(sizes[nz] - (counts[nz] ** 2).sum(axis=1) / sizes[nz]))


def fit_classifier(features: np.ndarray, labels: Sequence[int], depth: int,
                   feature_mask: Sequence[int] | None = None) -> SurrogateTree:
    """Greedy symmetric classification tree; leaves hold integer labels.

    Each level adds one query shared by all cells, chosen to minimise the
    summed Gini impurity among midpoints of consecutive distinct values.
    Growth stops early once every cell is pure or no split separates any
    rows.  Leaves take the majority label of their cell (lowest label on
    ties); empty cells inherit their parent's label.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[0] != y.size:
        raise ValueError("need a nonempty 2-d feature matrix and one label per row")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    classes, y_idx = np.unique(y, return_inverse=True)
    n_labels = classes.size
    cols = range(X.shape[1]) if feature_mask is None else [int(f) for f in feature_mask]
    candidates = []
    for f in cols:
        u = np.unique(X[:, f])
        candidates += [(f, float(t)) for t in (u[:-1] + u[1:]) / 2.0]

    def majority(cell_labels: np.ndarray, default: int) -> int:
        if cell_labels.size == 0:
            return default
        return int(np.argmax(np.bincount(cell_labels, minlength=n_labels)))

    cells = np.zeros(X.shape[0], dtype=int)
    leaf_labels = [majority(y_idx, 0)]
    queries = []
    for _ in range(depth):
        current = _gini_total(y_idx, cells, n_labels)
        if current <= 1e-12 or not candidates:
            break
        best = None
        for f, t in candidates:
            split = 2 * cells + (X[:, f] > t)
            score = _gini_total(y_idx, split, n_labels)
            if best is None or score < best[0] - 1e-12:
                best = (score, f, t)
        _, f, t = best
        cells = 2 * cells + (X[:, f] > t)
        queries.append((f, t))
        leaf_labels = [majority(y_idx[cells == c], leaf_labels[c // 2])
                       for c in range(2 ** len(queries))]
    return SurrogateTree(tuple(queries), tuple(int(classes[l]) for l in leaf_labels))


# ---------------------------------------------------------------------------
# learning heuristic


def _meta_key(meta) -> tuple:
    return tuple(sorted((k, tuple(v)) for k, v in meta.to_payload().items()))


def candidate_matrix(problem, scenarios: ScenarioSet) -> tuple[list, np.ndarray, np.ndarray]:
    """Distinct meta-solutions of the nominal optima and their values on every scenario.

    Returns ``(candidates, matrix, source)`` where ``matrix[i, j]`` evaluates
    candidate ``i`` on scenario ``j`` and ``source[j]`` is the candidate
    extracted from scenario ``j``'s own optimum.
    """
    candidates, index, source = [], {}, []
    for c in scenarios.costs:
        meta = problem.meta_of(problem.nominal(c)[0])
        key = _meta_key(meta)
        if key not in index:
            index[key] = len(candidates)
            candidates.append(meta)
        source.append(index[key])
    matrix = np.array([problem.evaluate(scenarios.costs, m) for m in candidates])
    return candidates, matrix, np.array(source)


def learn_heuristic(problem, scenarios: ScenarioSet, depth: int,
                    n_leaves: int | None = None, solver: SolverOptions | None = None,
                    feature_mask: Sequence[int] | None = None) -> TrainResult:
    """Nominal solves, candidate selection, then a classification tree on the labels."""
    start = time.perf_counter()
    k = 2 ** depth if n_leaves is None else n_leaves
    if k > 2 ** depth:
        raise ValueError(f"{k} leaves do not fit into a depth-{depth} tree")
    candidates, matrix, _ = candidate_matrix(problem, scenarios)
    sel = solve_selection_ip(matrix, min(k, len(scenarios)), problem.sense, solver,
                             scenarios.probabilities)
    skeleton = fit_classifier(scenarios.features, sel.assignment, depth, feature_mask)
    tree = SurrogateTree(skeleton.queries, tuple(candidates[i] for i in skeleton.leaves),
                         {"method": "lh"})
    seconds = time.perf_counter() - start
    return TrainResult(tree, Status.FEASIBLE.value, seconds, extra={
        "assignment_objective": sel.objective,
        "n_candidates": len(candidates),
        "selected": sel.selected,
    })


# ---------------------------------------------------------------------------
# exact models and model-based heuristics


def _solve_model(model, solver: SolverOptions | None):
    sol = solve(model, solver or SolverOptions())
    if not sol.status.has_solution:
        raise TrainingError(f"{model.name}: solver status {sol.status.value} ({sol.message})")
    return sol


def train_mip(problem, scenarios: ScenarioSet, depth: int, solver: SolverOptions | None = None,
              criterion: Criterion = Criterion.LAPLACE,
              feature_mask: Sequence[int] | None = None) -> TrainResult:
    """Exact meta-solution tree (``depth = 0`` gives the single best meta-solution)."""
    start = time.perf_counter()
    model, handles = problem.build_meta_mip(scenarios, depth, criterion, feature_mask)
    sol = solve(model, solver or SolverOptions())
    if not sol.status.has_solution:
        hint = getattr(problem, "infeasible_hint", None)
        detail = f"; {hint(scenarios)}" if hint and sol.status is Status.INFEASIBLE else ""
        raise TrainingError(f"{model.name}: solver status {sol.status.value}{detail}")
    kwargs = {}
    if depth and hasattr(problem, "infeasible_hint"):
        # leaves without training scenarios get the single best meta-solution
        from .tree_block import leaf_assignment
        if len(set(leaf_assignment(handles.block, sol).tolist())) < 2 ** depth:
            kwargs["fallback"] = best_single_meta(problem, scenarios, solver, criterion).tree.leaves[0]
    tree = problem.decode_meta(handles, sol, scenarios, **kwargs)
    tree = SurrogateTree(tree.queries, tree.leaves, {"method": "mip" if depth else "meta1"})
    return TrainResult(tree, sol.status.value, time.perf_counter() - start, sol.objective,
                       sol.bound, {"nodes": sol.nodes})


def best_single_meta(problem, scenarios: ScenarioSet, solver: SolverOptions | None = None,
                     criterion: Criterion = Criterion.LAPLACE) -> TrainResult:
    """META1: one meta-solution for every scenario."""
    return train_mip(problem, scenarios, 0, solver, criterion)


ENUM_LIMIT = 2000   # largest number of split combinations solved by enumeration


def split_partitions(features: np.ndarray, feature_mask: Sequence[int] | None = None
                     ) -> list[tuple[int, float]]:
    """One query per distinct way of splitting the rows, plus a send-all-left query.

    Thresholds are midpoints between consecutive distinct values; queries that
    induce the same left/right partition as an earlier one are dropped.
    """
    X = np.asarray(features, dtype=float)
    cols = list(range(X.shape[1])) if feature_mask is None else [int(f) for f in feature_mask]
    first = cols[0]
    queries = [(first, float(X[:, first].max()))]
    seen = {np.zeros(X.shape[0], dtype=bool).tobytes()}
    for f in cols:
        u = np.unique(X[:, f])
        for t in (u[:-1] + u[1:]) / 2.0:
            right = X[:, f] > t
            for key in (right.tobytes(), (~right).tobytes()):
                if key in seen:
                    break
            else:
                seen.add(right.tobytes())
                queries.append((f, float(t)))
    return queries


def enumeration_size(scenarios: ScenarioSet, depth: int,
                     feature_mask: Sequence[int] | None = None) -> int:
    """Number of query combinations :func:`enumerate_micro` would visit."""
    return math.comb(len(split_partitions(scenarios.features, feature_mask)) + depth - 1, depth)


def enumerate_micro(problem, scenarios: ScenarioSet, depth: int,
                    feature_mask: Sequence[int] | None = None) -> tuple[SurrogateTree, float]:
    """Exact micro-solution tree for the Laplace criterion by enumerating splits.

    For fixed leaf membership the best solution of a leaf is the nominal
    optimum on the probability-weighted sum of its scenarios' costs, so the
    optimum is found by trying every combination of distinct partitions
    (query order only permutes leaves, so combinations suffice).
    """
    X = scenarios.features
    p = scenarios.probabilities
    queries = split_partitions(X, feature_mask)
    fallback = problem.best_single_micro(scenarios)
    memo: dict[bytes, tuple[object, float]] = {}

    def leaf_value(members: np.ndarray):
        key = members.tobytes()
        if key not in memo:
            memo[key] = problem.nominal(p[members] @ scenarios.costs[members])
        return memo[key]

    sign = -1.0 if problem.sense == MAX else 1.0
    best = None
    for combo in itertools.combinations_with_replacement(range(len(queries)), depth):
        chosen = [queries[i] for i in combo]
        cells = np.zeros(len(scenarios), dtype=int)
        for f, t in chosen:
            cells = 2 * cells + (X[:, f] > t)
        total, leaves = 0.0, []
        for k in range(2 ** depth):
            members = cells == k
            if not members.any():
                leaves.append(fallback)
                continue
            sol, value = leaf_value(members)
            leaves.append(sol)
            total += value
        if best is None or sign * total < sign * best[0] - 1e-9:
            best = (total, chosen, leaves)
    total, chosen, leaves = best
    return SurrogateTree(tuple(chosen), tuple(leaves)), total


def train_micro(problem, scenarios: ScenarioSet, depth: int, solver: SolverOptions | None = None,
                criterion: Criterion = Criterion.LAPLACE,
                feature_mask: Sequence[int] | None = None, strategy: str = "auto") -> TrainResult:
    """Tree with one concrete solution per leaf.

    ``strategy`` is ``"mip"``, ``"enumerate"`` or ``"auto"``; the latter
    enumerates (Laplace criterion only) when at most :data:`ENUM_LIMIT` split
    combinations exist and solves the model otherwise.  Both are exact.
    """
    start = time.perf_counter()
    if strategy not in ("auto", "mip", "enumerate"):
        raise ValueError(f"unknown strategy {strategy!r}")
    laplace = Criterion(criterion) is Criterion.LAPLACE
    if strategy == "enumerate" and not laplace:
        raise ValueError("enumeration only covers the Laplace criterion")
    if strategy == "enumerate" or (strategy == "auto" and laplace and depth > 0 and
                                   enumeration_size(scenarios, depth, feature_mask) <= ENUM_LIMIT):
        tree, value = enumerate_micro(problem, scenarios, depth, feature_mask)
        tree = SurrogateTree(tree.queries, tree.leaves, {"method": "micro"})
        return TrainResult(tree, Status.OPTIMAL.value, time.perf_counter() - start, value, value,
                           {"strategy": "enumerate"})
    model, handles = problem.build_micro_mip(scenarios, depth, criterion, feature_mask)
    sol = _solve_model(model, solver)
    tree = problem.decode_micro(handles, sol, scenarios)
    tree = SurrogateTree(tree.queries, tree.leaves, {"method": "micro"})
    return TrainResult(tree, sol.status.value, time.perf_counter() - start, sol.objective,
                       sol.bound, {"nodes": sol.nodes, "strategy": "mip"})


def m2m(problem, scenarios: ScenarioSet, depth: int, solver: SolverOptions | None = None,
        criterion: Criterion = Criterion.LAPLACE, feature_mask: Sequence[int] | None = None,
        micro: TrainResult | None = None) -> TrainResult:
    """Micro-solution tree with every leaf replaced by its meta-solution.

    A precomputed ``micro`` result can be passed to avoid solving twice; the
    reported time then includes the micro solve.
    """
    if micro is None:
        micro = train_micro(problem, scenarios, depth, solver, criterion, feature_mask)
    start = time.perf_counter()
    leaves = tuple(problem.micro_to_meta(leaf) for leaf in micro.tree.leaves)
    tree = SurrogateTree(micro.tree.queries, leaves, {"method": "m2m"})
    seconds = micro.seconds + time.perf_counter() - start
    return TrainResult(tree, micro.status, seconds, extra={"micro_objective": micro.objective})


def best_single_micro(problem, scenarios: ScenarioSet,
                      criterion: Criterion = Criterion.LAPLACE,
                      solver: SolverOptions | None = None) -> TrainResult:
    """MICRO1: one concrete solution for every scenario.

    Under the Laplace criterion this is the nominal problem on expected costs;
    the robust criterion needs the depth-0 micro model.
    """
    start = time.perf_counter()
    if Criterion(criterion) is Criterion.LAPLACE:
        sol = problem.best_single_micro(scenarios)
        tree = SurrogateTree((), (sol,), {"method": "micro1"})
        return TrainResult(tree, Status.OPTIMAL.value, time.perf_counter() - start)
    result = train_micro(problem, scenarios, 0, solver, criterion)
    result.tree = SurrogateTree((), result.tree.leaves, {"method": "micro1"})
    return result


__all__ = [
    "TrainResult", "TrainingError", "SelectionInfeasible", "Selection", "evaluate_tree",
    "tree_objective", "opt_values", "solve_selection_ip", "fit_classifier", "candidate_matrix",
    "learn_heuristic", "train_mip", "best_single_meta", "train_micro", "m2m", "best_single_micro",
]
