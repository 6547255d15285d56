"""Domain types shared by every problem and training method.

Leaf indices and feature indices are 0-based throughout the package.  A tree of
depth ``Q`` has ``K = 2**Q`` leaves; a scenario that goes right at depth ``q``
(0-based) adds ``2**(Q - 1 - q)`` to its leaf index, so for ``Q = 2`` the leaves
reachable through the right child of the root are ``{2, 3}`` and those reachable
through the right child at depth 1 are ``{1, 3}``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np


class Criterion(str, enum.Enum):
    LAPLACE = "laplace"
    ROBUST = "robust"


MIN = "min"
MAX = "max"


def check_sense(sense: str) -> str:
    if sense not in (MIN, MAX):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    return sense


def better(a: float, b: float, sense: str) -> bool:
    """True if ``a`` is strictly better than ``b`` under ``sense``."""
    return a < b if sense == MIN else a > b


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ScenarioSet:
    """N scenarios: instance features, cost (or profit) vectors, probabilities."""

    features: np.ndarray
    costs: np.ndarray
    probabilities: np.ndarray = None  # type: ignore[assignment]
    ids: tuple = ()

    def __post_init__(self):
        feats = np.array(self.features, dtype=float, ndmin=2)
        costs = np.array(self.costs, dtype=float, ndmin=2)
        n = feats.shape[0]
        if n < 1:
            raise ValueError("a scenario set needs at least one scenario")
        if costs.shape[0] != n:
            raise ValueError(f"{costs.shape[0]} cost vectors for {n} feature rows")
        if self.probabilities is None:
            probs = np.full(n, 1.0 / n)
        else:
            probs = np.asarray(self.probabilities, dtype=float).reshape(-1)
            if probs.shape[0] != n:
                raise ValueError("one probability per scenario required")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
                raise ValueError("probabilities must be nonnegative and sum to 1")
        ids = tuple(self.ids) if self.ids else tuple(range(n))
        if len(ids) != n:
            raise ValueError("one id per scenario required")
        for arr in (feats, costs, probs):
            arr.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index: Sequence[int]) -> "ScenarioSet":
        index = list(index)
        probs = self.probabilities[index]
        return ScenarioSet(self.features[index], self.costs[index], probs / probs.sum(),
                           tuple(self.ids[i] for i in index))


# ---------------------------------------------------------------------------
# leaf payloads


@dataclass(frozen=True)
class KnapsackBudgets:
    """Meta-solution of the knapsack problem: one budget per item category."""

    budgets: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in self.budgets)
        if any(v < 0 or not math.isfinite(v) for v in b):
            raise ValueError(f"budgets must be finite and nonnegative: {b}")
        object.__setattr__(self, "budgets", b)

    def to_payload(self) -> dict:
        return {"budgets": list(self.budgets)}


@dataclass(frozen=True)
class DistrictSequence:
    """Meta-solution of the shortest path problem: ordered districts to traverse."""

    districts: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(v) for v in self.districts)
        if not d:
            raise ValueError("a district sequence must not be empty")
        if any(a == b for a, b in zip(d, d[1:])):
            raise ValueError(f"consecutive districts must differ: {d}")
        object.__setattr__(self, "districts", d)

    def __len__(self) -> int:
        return len(self.districts)

    def to_payload(self) -> dict:
        return {"districts": list(self.districts)}


@dataclass(frozen=True)
class ItemSelection:
    """Micro-solution of the knapsack problem (0/1 per item)."""

    items: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(round(v)) for v in self.items))

    def to_payload(self) -> dict:
        return {"items": list(self.items)}


@dataclass(frozen=True)
class NodePath:
    """Micro-solution of the shortest path problem (node ids from source to sink)."""

    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def to_payload(self) -> dict:
        return {"path": list(self.nodes)}


MetaSolution = Union[KnapsackBudgets, DistrictSequence]
Leaf = Union[KnapsackBudgets, DistrictSequence, ItemSelection, NodePath]


def leaf_from_payload(payload: dict) -> Leaf:
    if "budgets" in payload:
        return KnapsackBudgets(payload["budgets"])
    if "districts" in payload:
        return DistrictSequence(payload["districts"])
    if "items" in payload:
        return ItemSelection(payload["items"])
    if "path" in payload:
        return NodePath(payload["path"])
    raise ValueError(f"unknown leaf payload: {sorted(payload)}")


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True)
class Query:
    feature: int
    threshold: float


@dataclass(frozen=True)
class SurrogateTree:
    """Symmetric univariate tree: one (feature, threshold) query per depth."""

    queries: tuple[Query, ...]
    leaves: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        queries = tuple(q if isinstance(q, Query) else Query(int(q[0]), float(q[1]))
                        for q in self.queries)
        leaves = tuple(self.leaves)
        if len(leaves) != 2 ** len(queries):
            raise ValueError(f"depth {len(queries)} needs {2 ** len(queries)} leaves, "
                             f"got {len(leaves)}")
        object.__setattr__(self, "queries", queries)
        object.__setattr__(self, "leaves", leaves)

    @property
    def depth(self) -> int:
        return len(self.queries)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def with_leaves(self, leaves: Iterable) -> "SurrogateTree":
        return SurrogateTree(self.queries, tuple(leaves), dict(self.metadata))

    def to_dict(self) -> dict:
        doc = {
            "depth": self.depth,
            "queries": [{"feature": q.feature, "threshold": q.threshold} for q in self.queries],
            "leaves": [leaf.to_payload() for leaf in self.leaves],
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SurrogateTree":
        queries = tuple(Query(int(q["feature"]), float(q["threshold"])) for q in doc["queries"])
        if int(doc["depth"]) != len(queries):
            raise ValueError("depth does not match the number of queries")
        leaves = tuple(leaf_from_payload(p) for p in doc["leaves"])
        return cls(queries, leaves, dict(doc.get("metadata", {})))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "SurrogateTree":
        return cls.from_dict(json.loads(Path(path).read_text()))


def right_leaves(depth: int, q: int) -> list[int]:
    """Leaves reachable through the right child of the depth-``q`` query."""
    step = 2 ** (depth - 1 - q)
    return [k for k in range(2 ** depth) if (k // step) % 2 == 1]


def route(tree: SurrogateTree, features: Sequence[float]) -> int:
    """Leaf index reached by a feature vector; ties at a threshold go left."""
    x = np.asarray(features, dtype=float).reshape(-1)
    k = 0
    for q in tree.queries:
        if not 0 <= q.feature < x.shape[0]:
            raise ValueError(f"query on feature {q.feature} but vector has {x.shape[0]} entries")
        k = 2 * k + (1 if x[q.feature] > q.threshold else 0)
    return k


def route_all(tree: SurrogateTree, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-d feature matrix")
    k = np.zeros(X.shape[0], dtype=int)
    for q in tree.queries:
        if not 0 <= q.feature < X.shape[1]:
            raise ValueError(f"query on feature {q.feature} but matrix has {X.shape[1]} columns")
        k = 2 * k + (X[:, q.feature] > q.threshold)
    return k


# ---------------------------------------------------------------------------
# decision criteria and reporting


def aggregate(criterion: Criterion | str, values: Sequence[float],
              probabilities: Sequence[float] | None = None, sense: str = MIN) -> float:
    """Collapse per-scenario objective values into one number."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("cannot aggregate an empty vector")
    criterion = Criterion(criterion)
    if criterion is Criterion.ROBUST:
        return float(v.max() if check_sense(sense) == MIN else v.min())
    p = np.full(v.size, 1.0 / v.size) if probabilities is None else np.asarray(probabilities, float)
    if p.shape != v.shape:
        raise ValueError("one probability per value required")
    return float(np.dot(p, v))


class DegenerateScale(ValueError):
    """Raised when the MICRO1 and OPT anchors coincide."""


def scaled_objective(obj: float, obj_micro1: float, obj_opt: float) -> float:
    """Affine rescaling with MICRO1 at 0 and the per-scenario optimum at 1."""
    denom = obj_opt - obj_micro1
    if denom == 0 or not math.isfinite(denom):
        raise DegenerateScale(f"OPT anchor {obj_opt} equals MICRO1 anchor {obj_micro1}")
    return (obj - obj_micro1) / denom + 0.0
