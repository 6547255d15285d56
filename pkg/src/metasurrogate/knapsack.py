"""Knapsack surrogates: per-category budgets as meta-solutions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (MAX, Criterion, ItemSelection, KnapsackBudgets, ScenarioSet, SurrogateTree)
from .milp import MilpModel, MilpSolution, SolverOptions, Status, solve
from .tree_block import TreeBlock, decode_tree, emit_tree_block, leaf_assignment

# groups up to this size are solved by exhaustive subset enumeration
ENUM_MAX_ITEMS = 16
CAP_TOL = 1e-6  # relative slack absorbing MILP feasibility tolerance


@dataclass(frozen=True)
class KnapsackInstance:
    weights: np.ndarray
    capacity: float
    categories: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if np.any(w <= 0):
            raise ValueError("item weights must be positive")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        cats = tuple(tuple(int(i) for i in c) for c in self.categories)
        flat = sorted(i for c in cats for i in c)
        if flat != list(range(w.size)) or any(len(c) == 0 for c in cats):
            raise ValueError("categories must partition the items into nonempty groups")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "capacity", float(self.capacity))
        object.__setattr__(self, "categories", cats)

    @property
    def n_items(self) -> int:
        return self.weights.size

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def category_weights(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([float(self.weights[list(c)] @ x[list(c)]) for c in self.categories])

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "capacity": self.capacity,
                "categories": [list(c) for c in self.categories]}


def even_categories(n_items: int, n_categories: int) -> tuple[tuple[int, ...], ...]:
    """Contiguous blocks whose sizes differ by at most one."""
    if not 1 <= n_categories <= n_items:
        raise ValueError(f"need 1 <= categories <= items, got {n_categories} for {n_items} items")
    return tuple(tuple(int(i) for i in b) for b in np.array_split(np.arange(n_items), n_categories))


def save_instance(path: str | Path, instance: KnapsackInstance, scenarios: ScenarioSet) -> None:
    doc = instance.to_dict()
    doc["scenarios"] = {"features": scenarios.features.tolist(),
                        "profits": scenarios.costs.tolist()}
    Path(path).write_text(json.dumps(doc))


def load_instance(path: str | Path) -> tuple[KnapsackInstance, ScenarioSet]:
    doc = json.loads(Path(path).read_text())
    inst = KnapsackInstance(doc["weights"], doc["capacity"], doc["categories"])
    sc = doc.get("scenarios", {})
    profits = np.asarray(sc["profits"], dtype=float)
    feats = np.asarray(sc.get("features", profits), dtype=float)
    return inst, ScenarioSet(feats, profits)


# ---------------------------------------------------------------------------
# exact single-constraint knapsacks


@lru_cache(maxsize=256)
def _subsets(weights: tuple[float, ...]) -> tuple[np.ndarray, np.ndarray]:
    m = len(weights)
    masks = ((np.arange(2 ** m)[:, None] >> np.arange(m)[None, :]) & 1).astype(float)
    return masks, masks @ np.asarray(weights, dtype=float)


def _knapsack_milp(profits: np.ndarray, weights: np.ndarray, cap: float) -> np.ndarray:
    model = MilpModel("knap", MAX)
    xs = [model.add_binary(f"x{i}") for i in range(weights.size)]
    model.add_constraint(zip(xs, weights), "<=", cap)
    model.set_objective(zip(xs, profits))
    sol = solve(model, SolverOptions("highs"))
    if sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"knapsack solve failed: {sol.status.value}")
    return np.round(sol.values).astype(float)


def best_subsets(profits: np.ndarray, weights: np.ndarray, cap: float) -> np.ndarray:
    """Optimal 0/1 selections (one row per profit row) under one capacity."""
    P = np.atleast_2d(np.asarray(profits, dtype=float))
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or cap < 0:
        return np.zeros((P.shape[0], w.size))
    if w.size <= ENUM_MAX_ITEMS:
        masks, sub_w = _subsets(tuple(w.tolist()))
        feasible = sub_w <= cap + CAP_TOL * max(1.0, cap)
        masks = masks[feasible]
        values = P @ masks.T
        # argmax takes the first maximum; the empty set is row 0 and always feasible
        return masks[np.argmax(values, axis=1)]
    return np.array([_knapsack_milp(p, w, cap) for p in P])


def solve_nominal(instance: KnapsackInstance, profits: Sequence[float]) -> tuple[ItemSelection, float]:
    """Best item set under the full capacity."""
    p = np.asarray(profits, dtype=float)
    x = best_subsets(p, instance.weights, instance.capacity)[0]
    return ItemSelection(x), float(p @ x)


def _meta_selection(instance: KnapsackInstance, profits: np.ndarray,
                    budgets: Sequence[float]) -> np.ndarray:
    P = np.atleast_2d(profits)
    X = np.zeros_like(P)
    for cat, cap in zip(instance.categories, budgets):
        idx = list(cat)
        X[:, idx] = best_subsets(P[:, idx], instance.weights[idx], float(cap))
    return X


def evaluate_meta(instance: KnapsackInstance, profits: Sequence[float] | np.ndarray,
                  meta: KnapsackBudgets) -> float | np.ndarray:
    """Best profit when category ``f`` may use at most ``budgets[f]`` weight.

    Budgets are used as given; see :func:`rescale_budgets`.  A 2-d ``profits``
    argument evaluates every row and returns an array.
    """
    if len(meta.budgets) != instance.n_categories:
        raise ValueError(f"{len(meta.budgets)} budgets for {instance.n_categories} categories")
    P = np.asarray(profits, dtype=float)
    X = _meta_selection(instance, P, meta.budgets)
    values = np.einsum("ij,ij->i", np.atleast_2d(P), X)
    return values if P.ndim == 2 else float(values[0])


def rescale_budgets(meta: KnapsackBudgets, capacity: float) -> KnapsackBudgets:
    """Scale budgets to sum to ``capacity``; all-zero budgets become an even split."""
    b = np.asarray(meta.budgets, dtype=float)
    total = b.sum()
    if total <= 0:
        return KnapsackBudgets(np.full(b.size, capacity / b.size))
    return KnapsackBudgets(b * (capacity / total))


def meta_of(instance: KnapsackInstance, x: ItemSelection) -> KnapsackBudgets:
    return KnapsackBudgets(instance.category_weights(x.items))


# ---------------------------------------------------------------------------
# MILP models


@dataclass
class SurrogateHandles:
    x: np.ndarray                 # (N, n) item variables per scenario
    budgets: np.ndarray           # (K, F_S) budget variables
    block: TreeBlock | None
    depth: int
    extra: dict = field(default_factory=dict)


def _objective(model: MilpModel, scenarios: ScenarioSet, x: np.ndarray,
               criterion: Criterion) -> None:
    P = scenarios.costs
    if Criterion(criterion) is Criterion.LAPLACE:
        p = scenarios.probabilities
        model.set_objective(((int(x[j, i]), p[j] * P[j, i]) for j in range(x.shape[0])
                             for i in range(x.shape[1])), MAX)
        return
    worst = model.add_var("worst", -np.inf, np.inf)
    for j in range(x.shape[0]):
        terms = [(int(x[j, i]), -P[j, i]) for i in range(x.shape[1])]
        model.add_constraint(terms + [(worst, 1.0)], "<=", 0.0, f"worst_{j}")
    model.set_objective({worst: 1.0}, MAX)


def build_surrogate_mip(instance: KnapsackInstance, scenarios: ScenarioSet, depth: int,
                        criterion: Criterion = Criterion.LAPLACE,
                        feature_mask: Sequence[int] | None = None) -> tuple[MilpModel, SurrogateHandles]:
    """Tree-routed budget model; ``depth = 0`` gives the single-budget model."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n, N, F = instance.n_items, len(scenarios), instance.n_categories
    K = 2 ** depth
    model = MilpModel(f"knapsack_meta_d{depth}", MAX)
    block = emit_tree_block(model, scenarios.features, depth, feature_mask) if depth else None
    x = np.array([[model.add_binary(f"x_{j}_{i}") for i in range(n)] for j in range(N)])
    C = np.array([[model.add_var(f"budget_{k}_{f}", 0.0, instance.capacity) for f in range(F)]
                  for k in range(K)])
    for k in range(K):
        model.add_constraint({int(C[k, f]): 1.0 for f in range(F)}, "<=", instance.capacity,
                             f"capacity_{k}")
    w = instance.weights
    for f, cat in enumerate(instance.categories):
        big_m = float(w[list(cat)].sum())
        for j in range(N):
            for k in range(K):
                terms = [(int(x[j, i]), w[i]) for i in cat] + [(int(C[k, f]), -1.0)]
                if block is None:
                    model.add_constraint(terms, "<=", 0.0, f"budget_{f}_{j}")
                else:
                    terms.append((int(block.leaf_vars[k, j]), big_m))
                    model.add_constraint(terms, "<=", big_m, f"budget_{f}_{k}_{j}")
    _objective(model, scenarios, x, criterion)
    return model, SurrogateHandles(x, C, block, depth, {"instance": instance})


def decode_surrogate(handles: SurrogateHandles, solution: MilpSolution) -> SurrogateTree:
    budgets = np.clip(solution.values[handles.budgets], 0.0, None)
    # lift each budget to the weight its scenarios actually pack, so solver
    # tolerance never leaves a budget marginally below its own selection
    instance = handles.extra["instance"]
    used = np.array([instance.category_weights(np.round(solution.values[row]))
                     for row in handles.x])
    assigned = (np.zeros(len(used), dtype=int) if handles.block is None
                else leaf_assignment(handles.block, solution))
    for k in range(budgets.shape[0]):
        if np.any(assigned == k):
            budgets[k] = np.maximum(budgets[k], used[assigned == k].max(axis=0))
    leaves = [KnapsackBudgets(b) for b in budgets]
    if handles.block is None:
        return SurrogateTree((), tuple(leaves))
    return decode_tree(handles.block, solution, leaves)


def build_micro_mip(instance: KnapsackInstance, scenarios: ScenarioSet, depth: int,
                    criterion: Criterion = Criterion.LAPLACE,
                    feature_mask: Sequence[int] | None = None) -> tuple[MilpModel, SurrogateHandles]:
    """Tree with one concrete item set per leaf.

    ``z[j, k, i]`` is what scenario ``j`` collects from item ``i`` of leaf ``k``;
    it is capped by both the leaf's item choice and the scenario's leaf
    indicator.  Valid because profits are nonnegative.
    """
    if np.any(scenarios.costs < 0):
        raise ValueError("micro model requires nonnegative profits")
    n, N = instance.n_items, len(scenarios)
    K = 2 ** depth
    model = MilpModel(f"knapsack_micro_d{depth}", MAX)
    block = emit_tree_block(model, scenarios.features, depth, feature_mask) if depth else None
    items = np.array([[model.add_binary(f"item_{k}_{i}") for i in range(n)] for k in range(K)])
    for k in range(K):
        model.add_constraint(zip(items[k].tolist(), instance.weights), "<=", instance.capacity,
                             f"capacity_{k}")
    # collected[j] lists (variable, item) pairs whose sum is scenario j's selection
    if block is None:
        collected = [[(int(items[0, i]), i) for i in range(n)] for _ in range(N)]
    else:
        collected = [[] for _ in range(N)]
        for j in range(N):
            for k in range(K):
                lk = int(block.leaf_vars[k, j])
                for i in range(n):
                    z = model.add_var(f"z_{j}_{k}_{i}", 0.0, 1.0)
                    model.add_constraint({z: 1.0, int(items[k, i]): -1.0}, "<=", 0.0)
                    model.add_constraint({z: 1.0, lk: -1.0}, "<=", 0.0)
                    collected[j].append((z, i))
    P, p = scenarios.costs, scenarios.probabilities
    if Criterion(criterion) is Criterion.LAPLACE:
        model.set_objective(((v, p[j] * P[j, i]) for j in range(N) for v, i in collected[j]), MAX)
    else:
        worst = model.add_var("worst", -np.inf, np.inf)
        for j in range(N):
            terms = [(v, -P[j, i]) for v, i in collected[j]]
            model.add_constraint(terms + [(worst, 1.0)], "<=", 0.0, f"worst_{j}")
        model.set_objective({worst: 1.0}, MAX)
    return model, SurrogateHandles(np.empty((0, n)), items, block, depth)


def decode_micro(handles: SurrogateHandles, solution: MilpSolution) -> SurrogateTree:
    leaves = [ItemSelection(np.round(solution.values[row])) for row in handles.budgets]
    if handles.block is None:
        return SurrogateTree((), tuple(leaves))
    return decode_tree(handles.block, solution, leaves)


# ---------------------------------------------------------------------------
# problem adapter used by heuristics and experiments


class KnapsackProblem:
    """Knapsack with profit scenarios; maximization."""

    sense = MAX
    name = "knapsack"

    def __init__(self, instance: KnapsackInstance, solver: SolverOptions | None = None):
        self.instance = instance
        self.solver = solver or SolverOptions()

    def nominal(self, costs: np.ndarray) -> tuple[ItemSelection, float]:
        return solve_nominal(self.instance, costs)

    def nominal_values(self, costs: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(costs)
        X = best_subsets(P, self.instance.weights, self.instance.capacity)
        return np.einsum("ij,ij->i", P, X)

    def meta_of(self, solution: ItemSelection) -> KnapsackBudgets:
        return meta_of(self.instance, solution)

    def evaluate(self, costs: np.ndarray, meta: KnapsackBudgets) -> np.ndarray:
        return np.atleast_1d(evaluate_meta(self.instance, np.atleast_2d(costs),
                                           rescale_budgets(meta, self.instance.capacity)))

    def micro_value(self, costs: np.ndarray, solution: ItemSelection) -> np.ndarray:
        return np.atleast_2d(costs) @ np.asarray(solution.items, dtype=float)

    def best_single_micro(self, scenarios: ScenarioSet) -> ItemSelection:
        avg = scenarios.probabilities @ scenarios.costs
        return self.nominal(avg)[0]

    def build_meta_mip(self, scenarios, depth, criterion=Criterion.LAPLACE, feature_mask=None):
        return build_surrogate_mip(self.instance, scenarios, depth, criterion, feature_mask)

    def decode_meta(self, handles, solution, scenarios) -> SurrogateTree:
        return decode_surrogate(handles, solution)

    def build_micro_mip(self, scenarios, depth, criterion=Criterion.LAPLACE, feature_mask=None):
        return build_micro_mip(self.instance, scenarios, depth, criterion, feature_mask)

    def decode_micro(self, handles, solution, scenarios) -> SurrogateTree:
        return decode_micro(handles, solution)

    def micro_to_meta(self, solution: ItemSelection) -> KnapsackBudgets:
        return self.meta_of(solution)
