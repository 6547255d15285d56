from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from ..core import DistrictSequence, NodePath, ScenarioSet


@dataclass(frozen=True)
class DistrictGraph:
    """Directed graph whose nodes carry a district label.

    Edges are addressed by their position in ``edges``; scenario cost vectors
    are indexed the same way.
    """

    nodes: tuple
    edges: tuple
    district: dict
    source: Hashable
    sink: Hashable
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple((u, v) for u, v in self.edges)
        index = {v: i for i, v in enumerate(nodes)}
        if len(index) != len(nodes):
            raise ValueError("duplicate node ids")
        if self.source not in index or self.sink not in index:
            raise ValueError("source and sink must be graph nodes")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        missing = [v for v in nodes if v not in self.district]
        if missing:
            raise ValueError(f"nodes without district: {missing[:5]}")
        if len(set(edges)) != len(edges):
            raise ValueError("parallel edges are not supported")
        for u, v in edges:
            if u not in index or v not in index:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise ValueError(f"self-loop at {u}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "district", {v: int(self.district[v]) for v in nodes})
        object.__setattr__(self, "_index", index)
        tail = np.array([index[u] for u, _ in edges], dtype=np.int64)
        head = np.array([index[v] for _, v in edges], dtype=np.int64)
        dist = np.array([self.district[v] for v in nodes], dtype=np.int64)
        out_edges: list[list[int]] = [[] for _ in nodes]
        in_edges: list[list[int]] = [[] for _ in nodes]
        for e, (a, b) in enumerate(zip(tail, head)):
            out_edges[a].append(e)
            in_edges[b].append(e)
        for name, value in (("tail", tail), ("head", head), ("node_district", dist),
                            ("out_edges", out_edges), ("in_edges", in_edges),
                            ("edge_index", {e: i for i, e in enumerate(edges)})):
            object.__setattr__(self, name, value)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def s(self) -> int:
        return self._index[self.source]

    @property
    def t(self) -> int:
        return self._index[self.sink]

    @property
    def districts(self) -> list[int]:
        return sorted(set(self.district.values()))

    def node_index(self, v) -> int:
        return self._index[v]

    def is_dag(self) -> bool:
        indeg = np.bincount(self.head, minlength=self.n_nodes)
        stack = [i for i in range(self.n_nodes) if indeg[i] == 0]
        seen = 0
        while stack:
            u = stack.pop()
            seen += 1
            for e in self.out_edges[u]:
                indeg[self.head[e]] -= 1
                if indeg[self.head[e]] == 0:
                    stack.append(int(self.head[e]))
        return seen == self.n_nodes

    def path_edges(self, path: Sequence) -> list[int]:
        return [self.edge_index[(a, b)] for a, b in zip(path, path[1:])]

    def path_cost(self, costs: np.ndarray, path: Sequence) -> np.ndarray | float:
        idx = self.path_edges(path)
        C = np.asarray(costs, dtype=float)
        return C[..., idx].sum(axis=-1)

    def district_sequence(self, path: Sequence) -> DistrictSequence:
        seq: list[int] = []
        for v in path:
            d = self.district[v]
            if not seq or seq[-1] != d:
                seq.append(d)
        return DistrictSequence(seq)

    # -- files -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {"nodes": [{"id": v, "district": self.district[v]} for v in self.nodes],
                "edges": [{"u": u, "v": v} for u, v in self.edges],
                "source": self.source, "sink": self.sink}

    @classmethod
    def from_dict(cls, doc: dict) -> "DistrictGraph":
        nodes = [n["id"] for n in doc["nodes"]]
        return cls(tuple(nodes), tuple((e["u"], e["v"]) for e in doc["edges"]),
                   {n["id"]: n["district"] for n in doc["nodes"]}, doc["source"], doc["sink"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "DistrictGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def save_scenarios_csv(path: str | Path, scenarios: ScenarioSet, n_edges: int,
                       context_names: Sequence[str] = ()) -> None:
    """One row per scenario: ``cost_<e>`` columns then ``ctx_<name>`` columns."""
    n_ctx = scenarios.n_features - n_edges
    if n_ctx != len(context_names):
        names = list(context_names) + [f"f{i}" for i in range(len(context_names), n_ctx)]
    else:
        names = list(context_names)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"cost_{e}" for e in range(n_edges)] + [f"ctx_{n}" for n in names])
        for cost, feat in zip(scenarios.costs, scenarios.features):
            w.writerow([repr(float(v)) for v in cost] + [repr(float(v)) for v in feat[n_edges:]])


def load_scenarios_csv(path: str | Path) -> tuple[ScenarioSet, list[str]]:
    """Read a scenario CSV; features are edge costs followed by context columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cost_cols = [i for i, h in enumerate(header) if h.startswith("cost_")]
    ctx_cols = [i for i, h in enumerate(header) if h.startswith("ctx_")]
    if len(cost_cols) + len(ctx_cols) != len(header):
        raise ValueError("scenario CSV columns must start with 'cost_' or 'ctx_'")
    data = np.array([[float(v) for v in r] for r in body], dtype=float)
    costs = data[:, cost_cols]
    feats = np.hstack([costs, data[:, ctx_cols]])
    return ScenarioSet(feats, costs), [header[i][4:] for i in ctx_cols]


# ---------------------------------------------------------------------------
# layered graph


@dataclass(frozen=True)
class LayeredGraph:
    """``n_layers`` copies of the node set.

    Same-district edges are copied inside every layer; cross-district edges
    connect layer ``l`` to layer ``l + 1``.  Arcs are ``(edge, from_layer,
    to_layer)`` triples.
    """

    graph: DistrictGraph
    n_layers: int
    arcs: tuple

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes * self.n_layers

    def intra_arcs(self) -> list[int]:
        return [a for a, (_, l0, l1) in enumerate(self.arcs) if l0 == l1]

    def inter_arcs(self) -> list[int]:
        return [a for a, (_, l0, l1) in enumerate(self.arcs) if l0 != l1]

    def incoming(self) -> dict[tuple[int, int], list[int]]:
        inc: dict[tuple[int, int], list[int]] = {}
        for a, (e, _, l1) in enumerate(self.arcs):
            inc.setdefault((int(self.graph.head[e]), l1), []).append(a)
        return inc

    def outgoing(self) -> dict[tuple[int, int], list[int]]:
        out: dict[tuple[int, int], list[int]] = {}
        for a, (e, l0, _) in enumerate(self.arcs):
            out.setdefault((int(self.graph.tail[e]), l0), []).append(a)
        return out


def build_layered(graph: DistrictGraph, n_layers: int) -> LayeredGraph:
    if n_layers < 1:
        raise ValueError("need at least one layer")
    arcs = []
    d = graph.node_district
    for e in range(graph.n_edges):
        u, w = graph.tail[e], graph.head[e]
        if d[u] == d[w]:
            arcs.extend((e, l, l) for l in range(n_layers))
        else:
            arcs.extend((e, l, l + 1) for l in range(n_layers - 1))
    return LayeredGraph(graph, n_layers, tuple(arcs))


# ---------------------------------------------------------------------------
# path search


def _dijkstra(graph: DistrictGraph, costs: np.ndarray, seq: Sequence[int] | None):
    """Cheapest s-t walk, optionally following a district sequence layer by layer.

    Returns (cost, list of node indices) or (inf, None).
    """
    c = np.asarray(costs, dtype=float)
    if c.shape != (graph.n_edges,):
        raise ValueError(f"expected {graph.n_edges} edge costs, got shape {c.shape}")
    if np.any(c < 0):
        raise ValueError("edge costs must be nonnegative")
    d = graph.node_district
    s, t = graph.s, graph.t
    L = 1 if seq is None else len(seq)
    if seq is not None and (d[s] != seq[0] or d[t] != seq[-1]):
        return math.inf, None
    start, goal = (s, 0), (t, L - 1)
    dist = {start: 0.0}
    prev: dict = {}
    heap = [(0.0, s, 0)]
    while heap:
        du, u, l = heapq.heappop(heap)
        if du > dist.get((u, l), math.inf):
            continue
        if (u, l) == goal:
            break
        for e in graph.out_edges[u]:
            w = int(graph.head[e])
            if seq is None or d[w] == d[u]:
                nl = l
            elif l + 1 < L and d[w] == seq[l + 1]:
                nl = l + 1
            else:
                continue
            nd = du + c[e]
            if nd < dist.get((w, nl), math.inf):
                dist[(w, nl)] = nd
                prev[(w, nl)] = (u, l)
                heapq.heappush(heap, (nd, w, nl))
    if goal not in dist:
        return math.inf, None
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return dist[goal], [u for u, _ in reversed(path)]


def shortest_path(graph: DistrictGraph, costs: np.ndarray) -> tuple[NodePath, float]:
    cost, path = _dijkstra(graph, costs, None)
    if path is None:
        raise ValueError("sink is not reachable from source")
    return NodePath(graph.nodes[i] for i in path), float(cost)


def conforming_path_mip(graph: DistrictGraph, costs: np.ndarray, seq: Sequence[int],
                        time_limit: float | None = 10.0):
    """Cheapest simple path following ``seq``, as a MILP on the layered graph."""
    from ..milp import MilpModel, SolverOptions, solve

    L = len(seq)
    d = graph.node_district
    s, t = graph.s, graph.t
    model = MilpModel("conforming_path", "min")
    arcs = []
    for e in range(graph.n_edges):
        u, w = int(graph.tail[e]), int(graph.head[e])
        if w == s or u == t:
            continue
        for l in range(L):
            if d[u] != seq[l]:
                continue
            if d[w] == d[u]:
                arcs.append((e, l, l))
            elif l + 1 < L and d[w] == seq[l + 1]:
                arcs.append((e, l, l + 1))
    xs = [model.add_binary(f"x_{e}_{l0}_{l1}") for e, l0, l1 in arcs]
    inflow: dict = {}
    outflow: dict = {}
    into_node: dict = {}
    for x, (e, l0, l1) in zip(xs, arcs):
        outflow.setdefault((int(graph.tail[e]), l0), []).append(x)
        inflow.setdefault((int(graph.head[e]), l1), []).append(x)
        into_node.setdefault(int(graph.head[e]), []).append(x)
    for v in range(graph.n_nodes):
        for l in range(L):
            terms = [(x, 1.0) for x in inflow.get((v, l), [])]
            terms += [(x, -1.0) for x in outflow.get((v, l), [])]
            if (v, l) == (s, 0):
                rhs = -1.0
            elif (v, l) == (t, L - 1):
                rhs = 1.0
            else:
                rhs = 0.0
            if terms or rhs:
                model.add_constraint(terms, "==", rhs)
    for v, xs_in in into_node.items():
        model.add_constraint([(x, 1.0) for x in xs_in], "<=", 1.0)
    model.set_objective(((x, float(costs[e])) for x, (e, _, _) in zip(xs, arcs)), "min")
    sol = solve(model, SolverOptions("highs", time_limit=time_limit))
    if not sol.status.has_solution:
        return math.inf, None, sol
    succ = {}
    for x, (e, l0, l1) in zip(xs, arcs):
        if sol[x] > 0.5:
            succ[(int(graph.tail[e]), l0)] = (int(graph.head[e]), l1)
    path = [(s, 0)]
    while path[-1] != (t, L - 1):
        path.append(succ[path[-1]])
    return sol.objective, [u for u, _ in path], sol


def evaluate_meta(graph: DistrictGraph, costs: np.ndarray, meta: DistrictSequence,
                  time_limit: float | None = 10.0) -> tuple[float, NodePath | None]:
    """Cheapest simple s-t path whose district sequence equals ``meta``.

    Returns ``(inf, None)`` when no conforming path exists.  The layered
    Dijkstra relaxation is exact whenever its walk repeats no node (always the
    case on acyclic graphs); otherwise a MILP with node caps decides.
    """
    seq = list(meta.districts)
    cost, path = _dijkstra(graph, costs, seq)
    if path is None:
        return math.inf, None
    if len(set(path)) != len(path):
        cost, path, _ = conforming_path_mip(graph, costs, seq, time_limit)
        if path is None:
            return math.inf, None
    return float(cost), NodePath(graph.nodes[i] for i in path)


__all__ = ["DistrictGraph", "LayeredGraph", "build_layered", "shortest_path", "evaluate_meta",
           "conforming_path_mip", "save_scenarios_csv", "load_scenarios_csv"]
