"""Instance constructions from the hardness reductions.

``hamiltonian_instance`` doubles an undirected graph so that a path following
an alternating two-district sequence of length ``2|V|`` exists iff the base
graph has a Hamiltonian s-t path.  ``sat_instance`` builds a fixed gadget graph
for ``n`` Boolean variables plus one 0/1 cost scenario per clause; some
district sequence is free in every scenario iff the formula is satisfiable.
"""

from __future__ import annotations

import itertools
from typing import Hashable, Iterable, Sequence

import numpy as np

from ..core import DistrictSequence
from .graph import DistrictGraph

DISTRICT_A, DISTRICT_B = 0, 1


def hamiltonian_instance(nodes: Sequence[Hashable], edges: Iterable[tuple], source: Hashable,
                         sink: Hashable) -> tuple[DistrictGraph, DistrictSequence]:
    """Doubled graph: ``(v, 0)`` in district A, ``(v, 1)`` in district B.

    Every node gets an edge ``(v,0) -> (v,1)`` and every undirected edge
    ``{i, j}`` becomes ``(i,1) -> (j,0)`` and ``(j,1) -> (i,0)``.  The target is
    ``(sink, 1)``.
    """
    nodes = list(nodes)
    new_nodes, district, new_edges = [], {}, []
    for v in nodes:
        a, b = (v, 0), (v, 1)
        new_nodes += [a, b]
        district[a], district[b] = DISTRICT_A, DISTRICT_B
        new_edges.append((a, b))
    seen = set()
    for i, j in edges:
        if i == j or frozenset((i, j)) in seen:
            continue
        seen.add(frozenset((i, j)))
        new_edges += [((i, 1), (j, 0)), ((j, 1), (i, 0))]
    graph = DistrictGraph(tuple(new_nodes), tuple(new_edges), district, (source, 0), (sink, 1))
    seq = DistrictSequence([DISTRICT_A, DISTRICT_B] * len(nodes))
    return graph, seq


def has_hamiltonian_path(nodes: Sequence[Hashable], edges: Iterable[tuple], source: Hashable,
                         sink: Hashable) -> bool:
    """Exhaustive search over orderings with fixed endpoints."""
    nodes = list(nodes)
    adj = {frozenset(e) for e in edges if e[0] != e[1]}
    if len(nodes) == 1:
        return source == sink
    if source == sink:
        return False
    middle = [v for v in nodes if v not in (source, sink)]
    for perm in itertools.permutations(middle):
        order = [source, *perm, sink]
        if all(frozenset(p) in adj for p in zip(order, order[1:])):
            return True
    return False


# ---------------------------------------------------------------------------
# 3-SAT gadget

def _gadget_nodes(n_vars: int):
    nodes, district = ["s", "t"], {"s": 0, "t": 1}
    for i in range(1, n_vars + 1):
        for lit, d in (("T", 2 * i), ("F", 2 * i + 1)):
            for half in (1, 2):
                name = f"{lit}{half}_{i}"
                nodes.append(name)
                district[name] = d
    return nodes, district


def literal_district(var: int, value: bool) -> int:
    """District of the true (``value=True``) or false gadget of variable ``var`` (1-based)."""
    return 2 * var + (0 if value else 1)


def sat_instance(clauses: Sequence[Sequence[int]], n_vars: int | None = None
                 ) -> tuple[DistrictGraph, np.ndarray]:
    """Gadget graph and one cost row per clause.

    Clauses use DIMACS-style literals: ``3`` is x3, ``-3`` its negation.
    Only the in-gadget edges ``T1_i -> T2_i`` and ``F1_i -> F2_i`` carry cost;
    they are free in a clause's scenario exactly when the clause contains the
    matching literal.
    """
    clauses = [tuple(int(l) for l in c) for c in clauses]
    if n_vars is None:
        n_vars = max((abs(l) for c in clauses for l in c), default=1)
    if n_vars < 1:
        raise ValueError("need at least one variable")
    if any(l == 0 or abs(l) > n_vars for c in clauses for l in c):
        raise ValueError("literals must be nonzero and at most n_vars in magnitude")
    nodes, district = _gadget_nodes(n_vars)
    edges = [("s", "T1_1"), ("s", "F1_1"), (f"T2_{n_vars}", "t"), (f"F2_{n_vars}", "t")]
    for i in range(1, n_vars + 1):
        edges += [(f"T1_{i}", f"T2_{i}"), (f"F1_{i}", f"F2_{i}")]
    for i in range(1, n_vars):
        for half in (1, 2):
            for a in ("T", "F"):
                for b in ("T", "F"):
                    edges.append((f"{a}{half}_{i}", f"{b}{half}_{i + 1}"))
    graph = DistrictGraph(tuple(nodes), tuple(edges), district, "s", "t")
    costs = np.zeros((len(clauses), graph.n_edges))
    for j, clause in enumerate(clauses):
        for i in range(1, n_vars + 1):
            costs[j, graph.edge_index[(f"T1_{i}", f"T2_{i}")]] = 0.0 if i in clause else 1.0
            costs[j, graph.edge_index[(f"F1_{i}", f"F2_{i}")]] = 0.0 if -i in clause else 1.0
    return graph, costs


def assignment_sequence(assignment: Sequence[bool]) -> DistrictSequence:
    """District sequence walking the gadgets chosen by a truth assignment."""
    return DistrictSequence([0] + [literal_district(i + 1, v) for i, v in enumerate(assignment)]
                            + [1])


def is_satisfiable(clauses: Sequence[Sequence[int]], n_vars: int) -> bool:
    for bits in itertools.product((False, True), repeat=n_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


__all__ = ["hamiltonian_instance", "has_hamiltonian_path", "sat_instance", "assignment_sequence",
           "literal_district", "is_satisfiable", "DISTRICT_A", "DISTRICT_B"]
