"""Shortest paths whose interpretable description is the sequence of districts visited."""

from __future__ import annotations


import numpy as np

from ..core import MIN, Criterion, DistrictSequence, NodePath, ScenarioSet, SurrogateTree
from ..milp import SolverOptions
from .graph import (DistrictGraph, LayeredGraph, build_layered, conforming_path_mip, evaluate_meta,
                    load_scenarios_csv, save_scenarios_csv, shortest_path)
from .hardness import (assignment_sequence, has_hamiltonian_path, hamiltonian_instance,
                       is_satisfiable, sat_instance)
from .models import (LayerBudgetError, PathHandles, build_micro_mip, build_surrogate_mip,
                     decode_micro, decode_surrogate, layer_hint, min_sequence_length)

EVAL_TIME_LIMIT = 10.0


class ShortestPathProblem:
    """Edge-cost scenarios on a district graph; minimization.

    ``n_layers`` caps the length of district sequences in the meta model; by
    default it is the longest sequence among the training scenarios' own
    shortest paths (at least the shortest possible sequence).
    """

    sense = MIN
    name = "shortest_path"

    def __init__(self, graph: DistrictGraph, n_layers: int | None = None,
                 solver: SolverOptions | None = None, eval_time_limit: float = EVAL_TIME_LIMIT):
        self.graph = graph
        self.n_layers = n_layers
        self.solver = solver or SolverOptions()
        self.eval_time_limit = eval_time_limit
        self._cache: dict = {}

    def nominal(self, costs: np.ndarray) -> tuple[NodePath, float]:
        return shortest_path(self.graph, costs)

    def nominal_values(self, costs: np.ndarray) -> np.ndarray:
        return np.array([self.nominal(c)[1] for c in np.atleast_2d(costs)])

    def meta_of(self, solution: NodePath) -> DistrictSequence:
        return self.graph.district_sequence(solution.nodes)

    def evaluate(self, costs: np.ndarray, meta: DistrictSequence) -> np.ndarray:
        """Cheapest conforming path cost per scenario row; ``inf`` where none exists."""
        out = []
        for c in np.atleast_2d(costs):
            key = (c.tobytes(), meta.districts)
            if key not in self._cache:
                self._cache[key] = evaluate_meta(self.graph, c, meta, self.eval_time_limit)[0]
            out.append(self._cache[key])
        return np.array(out, dtype=float)

    def micro_value(self, costs: np.ndarray, solution: NodePath) -> np.ndarray:
        return np.atleast_1d(self.graph.path_cost(np.atleast_2d(costs), solution.nodes))

    def best_single_micro(self, scenarios: ScenarioSet) -> NodePath:
        return self.nominal(scenarios.probabilities @ scenarios.costs)[0]

    def layers_for(self, scenarios: ScenarioSet) -> int:
        if self.n_layers is not None:
            return self.n_layers
        lengths = [len(self.meta_of(self.nominal(c)[0])) for c in scenarios.costs]
        return max(lengths + [min_sequence_length(self.graph) or 1])

    def build_meta_mip(self, scenarios, depth, criterion=Criterion.LAPLACE, feature_mask=None):
        return build_surrogate_mip(self.graph, scenarios, depth, self.layers_for(scenarios),
                                   criterion, feature_mask)

    def decode_meta(self, handles, solution, scenarios, fallback=None) -> SurrogateTree:
        return decode_surrogate(handles, solution, fallback)

    def build_micro_mip(self, scenarios, depth, criterion=Criterion.LAPLACE, feature_mask=None):
        return build_micro_mip(self.graph, scenarios, depth, criterion, feature_mask)

    def decode_micro(self, handles, solution, scenarios) -> SurrogateTree:
        return decode_micro(handles, solution)

    def micro_to_meta(self, solution: NodePath) -> DistrictSequence:
        return self.meta_of(solution)

    def infeasible_hint(self, scenarios: ScenarioSet) -> str:
        return layer_hint(self.graph, self.layers_for(scenarios))


__all__ = [
    "ShortestPathProblem", "DistrictGraph", "LayeredGraph", "build_layered", "evaluate_meta",
    "conforming_path_mip", "shortest_path", "load_scenarios_csv", "save_scenarios_csv",
    "hamiltonian_instance", "has_hamiltonian_path", "sat_instance", "assignment_sequence",
    "is_satisfiable", "LayerBudgetError", "PathHandles", "build_surrogate_mip", "decode_surrogate",
    "build_micro_mip", "decode_micro", "layer_hint", "min_sequence_length", "EVAL_TIME_LIMIT",
]
