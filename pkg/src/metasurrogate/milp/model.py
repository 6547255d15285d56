from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from ..core import MAX, MIN, check_sense

INF = math.inf

FEAS_TOL = 1e-7
INT_TOL = 1e-6
GAP_TOL = 1e-6

_RELATIONS = {"<=": "<=", "L": "<=", ">=": ">=", "G": ">=", "==": "==", "=": "==", "E": "=="}


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"          # incumbent without optimality proof (time limit)
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NO_SOLUTION = "NoSolution"     # stopped before any incumbent was found
    ERROR = "Error"

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool

    @property
    def is_binary(self) -> bool:
        return self.integer and self.lb == 0 and self.ub == 1


class MilpModel:
    """Mixed-integer linear program with sparse rows.

    Variables are addressed by the integer index returned from :meth:`add_var`.
    """

    def __init__(self, name: str = "model", sense: str = MIN):
        self.name = name
        self.sense = check_sense(sense)
        self.variables: list[Variable] = []
        self._row_idx: list[np.ndarray] = []
        self._row_val: list[np.ndarray] = []
        self.relations: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, integer: bool = False) -> int:
        lb, ub = float(lb), float(ub)
        if lb > ub:
            raise ModelError(f"variable {name}: lower bound {lb} exceeds upper bound {ub}")
        self.variables.append(Variable(str(name), lb, ub, bool(integer)))
        return len(self.variables) - 1

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True)

    def add_constraint(self, terms: Mapping[int, float] | Iterable[tuple[int, float]],
                       relation: str, rhs: float, name: str | None = None) -> int:
        try:
            rel = _RELATIONS[relation]
        except KeyError:
            raise ModelError(f"unknown relation {relation!r}") from None
        merged: dict[int, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for j, a in items:
            j = int(j)
            if not 0 <= j < len(self.variables):
                raise ModelError(f"constraint references undeclared variable {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        idx = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        val = np.fromiter(merged.values(), dtype=float, count=len(merged))
        keep = val != 0.0
        self._row_idx.append(idx[keep])
        self._row_val.append(val[keep])
        self.relations.append(rel)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"c{len(self.rhs) - 1}")
        return len(self.rhs) - 1

    def set_objective(self, terms: Mapping[int, float] | Iterable[tuple[int, float]],
                      sense: str | None = None, constant: float = 0.0) -> None:
        if sense is not None:
            self.sense = check_sense(sense)
        self.objective = {}
        self.add_objective_terms(terms)
        self.objective_constant = float(constant)

    def add_objective_terms(self, terms: Mapping[int, float] | Iterable[tuple[int, float]]) -> None:
        items = terms.items() if isinstance(terms, Mapping) else terms
        for j, a in items:
            j = int(j)
            if not 0 <= j < len(self.variables):
                raise ModelError(f"objective references undeclared variable {j}")
            self.objective[j] = self.objective.get(j, 0.0) + float(a)

    # -- views ---------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.rhs)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self._row_idx[i], self._row_val[i]

    def var_index(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def integrality(self) -> np.ndarray:
        return np.array([v.integer for v in self.variables], dtype=bool)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def constraint_matrix(self) -> sp.csr_matrix:
        m = self.n_constraints
        if m == 0:
            return sp.csr_matrix((0, self.n_vars))
        counts = np.array([len(r) for r in self._row_idx])
        rows = np.repeat(np.arange(m), counts)
        cols = np.concatenate(self._row_idx) if counts.sum() else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(self._row_val) if counts.sum() else np.zeros(0)
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n_vars))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        rhs = np.asarray(self.rhs, dtype=float)
        rel = np.asarray(self.relations)
        lo = np.where(rel == "<=", -INF, rhs)
        hi = np.where(rel == ">=", INF, rhs)
        return lo, hi

    # -- evaluation ----------------------------------------------------------

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective_vector() @ np.asarray(x, float)) + self.objective_constant

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound, row or integrality violation of ``x``."""
        x = np.asarray(x, dtype=float)
        lb, ub = self.bounds()
        viol = [0.0, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0))]
        ints = self.integrality()
        if ints.any():
            viol.append(float(np.max(np.abs(x[ints] - np.round(x[ints])))))
        if self.n_constraints:
            ax = self.constraint_matrix() @ x
            lo, hi = self.row_bounds()
            viol.append(float(np.max(np.maximum(lo - ax, ax - hi))))
        return max(viol)


@dataclass
class MilpSolution:
    status: Status
    values: np.ndarray | None
    objective: float
    bound: float
    seconds: float
    nodes: int = 0
    root_bound: float = math.nan
    incumbents: list[float] = field(default_factory=list)
    message: str = ""

    def __getitem__(self, j: int) -> float:
        if self.values is None:
            raise ModelError(f"no values available (status {self.status.value})")
        return float(self.values[j])

    @property
    def gap(self) -> float:
        if not self.status.has_solution:
            return math.inf
        return abs(self.objective - self.bound)


def sense_sign(sense: str) -> float:
    """Multiplier turning ``sense`` into minimization."""
    return 1.0 if sense == MIN else -1.0


__all__ = ["MilpModel", "MilpSolution", "Status", "Variable", "ModelError",
           "INF", "FEAS_TOL", "INT_TOL", "GAP_TOL", "MIN", "MAX", "sense_sign"]
