"""MILP models for shortest-path surrogates.

The meta model routes every training scenario along its own path in the
layered graph; each leaf assigns at most one district to every layer and
cross-layer arcs are usable only where both endpoint layers carry the arc's
districts.  The micro model instead keeps one concrete s-t path per leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import MIN, Criterion, DistrictSequence, NodePath, ScenarioSet, SurrogateTree
from ..milp import MilpModel, MilpSolution
from ..tree_block import TreeBlock, decode_tree, emit_tree_block, leaf_assignment
from .graph import DistrictGraph, build_layered


class LayerBudgetError(ValueError):
    """No conforming path fits into the available number of layers."""


@dataclass
class PathHandles:
    graph: DistrictGraph
    flows: list                   # per scenario: list of (variable, edge, from_layer, to_layer)
    layer_vars: dict              # (layer, district, leaf) -> variable; meta model only
    leaf_edges: np.ndarray | None  # (K, E) edge variables; micro model only
    block: TreeBlock | None
    depth: int
    n_layers: int = 0
    extra: dict = field(default_factory=dict)


def _cost_objective(model: MilpModel, scenarios: ScenarioSet, flows: list,
                    criterion: Criterion) -> None:
    C = scenarios.costs
    if Criterion(criterion) is Criterion.LAPLACE:
        p = scenarios.probabilities
        model.set_objective(((v, p[j] * C[j, e]) for j in range(len(flows))
                             for v, e, *_ in flows[j]), MIN)
        return
    worst = model.add_var("worst", -np.inf, np.inf)
    for j in range(len(flows)):
        terms = [(v, C[j, e]) for v, e, *_ in flows[j]]
        model.add_constraint(terms + [(worst, -1.0)], "<=", 0.0, f"worst_{j}")
    model.set_objective({worst: 1.0}, MIN)


def _check_costs(graph: DistrictGraph, scenarios: ScenarioSet) -> None:
    if scenarios.costs.shape[1] != graph.n_edges:
        raise ValueError(f"scenario costs have {scenarios.costs.shape[1]} columns, "
                         f"graph has {graph.n_edges} edges")
    if np.any(scenarios.costs < 0):
        raise ValueError("edge costs must be nonnegative")


def build_surrogate_mip(graph: DistrictGraph, scenarios: ScenarioSet, depth: int, n_layers: int,
                        criterion: Criterion = Criterion.LAPLACE,
                        feature_mask: Sequence[int] | None = None) -> tuple[MilpModel, PathHandles]:
    """District-sequence tree model on ``n_layers`` copies of the graph.

    ``depth = 0`` drops the tree block and yields the single best sequence.
    Arcs entering the source or leaving the sink are never useful on a simple
    path and are left out.
    """
    _check_costs(graph, scenarios)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    layered = build_layered(graph, n_layers)
    N, K, D = len(scenarios), 2 ** depth, n_layers
    s, t = graph.s, graph.t
    dist = graph.node_district
    model = MilpModel(f"path_meta_d{depth}", MIN)
    block = emit_tree_block(model, scenarios.features, depth, feature_mask) if depth else None

    arcs = [(a, e, l0, l1) for a, (e, l0, l1) in enumerate(layered.arcs)
            if graph.head[e] != s and graph.tail[e] != t]
    y = {(l, f, k): model.add_binary(f"y_{l}_{f}_{k}")
         for l in range(D) for f in graph.districts for k in range(K)}
    for l in range(D):
        for k in range(K):
            model.add_constraint([(y[l, f, k], 1.0) for f in graph.districts], "<=", 1.0,
                                 f"onedistrict_{l}_{k}")

    flows = []
    for j in range(N):
        xs = [(model.add_binary(f"x_{j}_{e}_{l0}_{l1}"), e, l0, l1) for _, e, l0, l1 in arcs]
        flows.append(xs)
        inflow: dict = {}
        outflow: dict = {}
        for v, e, l0, l1 in xs:
            outflow.setdefault((int(graph.tail[e]), l0), []).append(v)
            inflow.setdefault((int(graph.head[e]), l1), []).append(v)
        for u in range(graph.n_nodes):
            if u == t:
                continue
            for l in range(D):
                terms = [(v, 1.0) for v in inflow.get((u, l), [])]
                terms += [(v, -1.0) for v in outflow.get((u, l), [])]
                rhs = -1.0 if (u, l) == (s, 0) else 0.0
                if terms:
                    model.add_constraint(terms, "==", rhs, f"flow_{j}_{u}_{l}")
                elif rhs:
                    raise LayerBudgetError("source has no outgoing arcs")
        into_t = [v for l in range(D) for v in inflow.get((t, l), [])]
        model.add_constraint([(v, 1.0) for v in into_t], "==", 1.0, f"sink_{j}")
        for u in range(graph.n_nodes):
            if u in (s, t):
                continue
            into_u = [v for l in range(D) for v in inflow.get((u, l), [])]
            if len(into_u) > 1:
                model.add_constraint([(v, 1.0) for v in into_u], "<=", 1.0, f"once_{j}_{u}")

        for v, e, l0, l1 in xs:
            ell = [None] if block is None else [int(block.leaf_vars[k, j]) for k in range(K)]
            for k, lk in enumerate(ell):
                gate = [] if lk is None else [(lk, 1.0)]
                rhs = 0.0 if lk is None else 1.0
                if l0 != l1:
                    fu, fw = int(dist[graph.tail[e]]), int(dist[graph.head[e]])
                    model.add_constraint([(v, 1.0), (y[l0, fu, k], -0.5), (y[l1, fw, k], -0.5)]
                                         + gate, "<=", rhs)
                if graph.head[e] == t and l1 < D - 1:
                    # the sequence must end in the layer where the sink is reached
                    nxt = [(y[l1 + 1, f, k], 1.0) for f in graph.districts]
                    model.add_constraint([(v, 1.0)] + nxt + gate, "<=", 1.0 + rhs)
    _cost_objective(model, scenarios, flows, criterion)
    return model, PathHandles(graph, flows, y, None, block, depth, n_layers)


def _walk(graph: DistrictGraph, succ: dict, start, goal_node: int, limit: int) -> list:
    path = [start]
    while path[-1][0] != goal_node:
        if path[-1] not in succ or len(path) > limit:
            raise ValueError("selected arcs do not form a source-sink path")
        path.append(succ[path[-1]])
    return path


def scenario_paths(handles: PathHandles, solution: MilpSolution) -> list[NodePath]:
    """Path chosen for every training scenario, projected onto the graph."""
    graph = handles.graph
    out = []
    for xs in handles.flows:
        succ = {}
        for v, e, l0, l1 in xs:
            if solution.values[v] > 0.5:
                succ[(int(graph.tail[e]), l0)] = (int(graph.head[e]), l1)
        walk = _walk(graph, succ, (graph.s, 0), graph.t, len(succ) + 1)
        out.append(NodePath(graph.nodes[u] for u, _ in walk))
    return out


def leaf_sequences(handles: PathHandles, solution: MilpSolution) -> list[list[int]]:
    """District per layer for each leaf, cut at the first unassigned layer."""
    K = 2 ** handles.depth
    graph = handles.graph
    seqs = []
    for k in range(K):
        seq = []
        for l in range(handles.n_layers):
            chosen = [f for f in graph.districts if solution.values[handles.layer_vars[l, f, k]] > 0.5]
            if not chosen:
                break
            seq.append(chosen[0])
        seqs.append(seq)
    return seqs


def decode_surrogate(handles: PathHandles, solution: MilpSolution,
                     fallback: DistrictSequence | None = None) -> SurrogateTree:
    """Leaves take the district sequences of their scenarios' paths.

    A leaf without training scenarios receives ``fallback`` when given, else
    whatever the layer variables say (repaired to start at the source district).
    """
    graph = handles.graph
    K = 2 ** handles.depth
    paths = scenario_paths(handles, solution)
    assigned = (np.zeros(len(paths), dtype=int) if handles.block is None
                else leaf_assignment(handles.block, solution))
    raw = leaf_sequences(handles, solution)
    leaves = []
    for k in range(K):
        members = np.flatnonzero(assigned == k)
        if members.size:
            leaves.append(graph.district_sequence(paths[members[0]].nodes))
        elif fallback is not None:
            leaves.append(fallback)
        else:
            seq = raw[k] or [graph.district[graph.source]]
            if seq[0] != graph.district[graph.source]:
                seq = [graph.district[graph.source]]
            leaves.append(DistrictSequence(seq))
    if handles.block is None:
        return SurrogateTree((), tuple(leaves))
    return decode_tree(handles.block, solution, leaves)


def build_micro_mip(graph: DistrictGraph, scenarios: ScenarioSet, depth: int,
                    criterion: Criterion = Criterion.LAPLACE,
                    feature_mask: Sequence[int] | None = None) -> tuple[MilpModel, PathHandles]:
    """Tree with one concrete s-t path per leaf.

    Leaf ``k`` holds a unit flow ``path[k]`` with at most one entering arc per
    node, so its support is a simple path plus node-disjoint cycles.  Scenario
    ``j`` pays for a flow ``w[j, k]`` of value ``leaf[k, j]`` inside that support.
    """
    _check_costs(graph, scenarios)
    N, K = len(scenarios), 2 ** depth
    s, t = graph.s, graph.t
    edges = [e for e in range(graph.n_edges) if graph.head[e] != s and graph.tail[e] != t]
    model = MilpModel(f"path_micro_d{depth}", MIN)
    block = emit_tree_block(model, scenarios.features, depth, feature_mask) if depth else None
    X = np.full((K, graph.n_edges), -1, dtype=np.int64)
    for k in range(K):
        for e in edges:
            X[k, e] = model.add_binary(f"path_{k}_{e}")
        _unit_flow(model, graph, [(int(X[k, e]), e) for e in edges], None, f"p{k}")
        for u in range(graph.n_nodes):
            into = [(int(X[k, e]), 1.0) for e in graph.in_edges[u] if X[k, e] >= 0]
            if len(into) > 1:
                model.add_constraint(into, "<=", 1.0, f"once_{k}_{u}")
    flows = []
    for j in range(N):
        if block is None:
            flows.append([(int(X[0, e]), e, 0, 0) for e in edges])
            continue
        xs = []
        for k in range(K):
            lk = int(block.leaf_vars[k, j])
            ws = [(model.add_var(f"w_{j}_{k}_{e}", 0.0, 1.0), e) for e in edges]
            for v, e in ws:
                model.add_constraint({v: 1.0, int(X[k, e]): -1.0}, "<=", 0.0)
            _unit_flow(model, graph, ws, lk, f"w{j}_{k}")
            xs.extend((v, e, k, k) for v, e in ws)
        flows.append(xs)
    _cost_objective(model, scenarios, flows, criterion)
    return model, PathHandles(graph, flows, {}, X, block, depth)


def _unit_flow(model: MilpModel, graph: DistrictGraph, arcs: list, value_var: int | None,
               tag: str) -> None:
    """Flow conservation sending 1 (or ``value_var``) from source to sink."""
    net: dict[int, list] = {}
    for v, e in arcs:
        net.setdefault(int(graph.tail[e]), []).append((v, -1.0))
        net.setdefault(int(graph.head[e]), []).append((v, 1.0))
    for u in range(graph.n_nodes):
        terms = list(net.get(u, []))
        if u == graph.s:
            demand = -1.0
        elif u == graph.t:
            demand = 1.0
        else:
            demand = 0.0
        if value_var is None:
            if terms or demand:
                model.add_constraint(terms, "==", demand, f"{tag}_flow_{u}")
        else:
            model.add_constraint(terms + [(value_var, -demand)], "==", 0.0, f"{tag}_flow_{u}")


def decode_micro(handles: PathHandles, solution: MilpSolution) -> SurrogateTree:
    graph = handles.graph
    leaves = []
    for row in handles.leaf_edges:
        succ = {}
        for e, v in enumerate(row):
            if v >= 0 and solution.values[v] > 0.5:
                succ[(int(graph.tail[e]), 0)] = (int(graph.head[e]), 0)
        walk = _walk(graph, succ, (graph.s, 0), graph.t, graph.n_nodes)
        leaves.append(NodePath(graph.nodes[u] for u, _ in walk))
    if handles.block is None:
        return SurrogateTree((), tuple(leaves))
    return decode_tree(handles.block, solution, leaves)


def min_sequence_length(graph: DistrictGraph) -> int | None:
    """Fewest districts on any source-sink walk (0-1 BFS over district changes)."""
    from collections import deque

    best = [math.inf] * graph.n_nodes
    best[graph.s] = 1
    queue = deque([graph.s])
    while queue:
        u = queue.popleft()
        for e in graph.out_edges[u]:
            w = int(graph.head[e])
            step = int(graph.node_district[w] != graph.node_district[u])
            if best[u] + step < best[w]:
                best[w] = best[u] + step
                (queue.append if step else queue.appendleft)(w)
    return None if math.isinf(best[graph.t]) else int(best[graph.t])


def layer_hint(graph: DistrictGraph, n_layers: int) -> str:
    """Diagnostic text for an infeasible layered model."""
    need = min_sequence_length(graph)
    if need is None:
        return "the sink is not reachable from the source"
    if need > n_layers:
        return f"{n_layers} layers are too few; the shortest district sequence has {need} entries"
    return f"{n_layers} layers cover the shortest district sequence ({need}); check the tree block"


__all__ = ["PathHandles", "LayerBudgetError", "build_surrogate_mip", "decode_surrogate",
           "scenario_paths", "leaf_sequences", "build_micro_mip", "decode_micro", "layer_hint",
           "min_sequence_length"]
