"""Mixed-integer linear programming layer."""

from .model import (FEAS_TOL, GAP_TOL, INF, INT_TOL, MilpModel, MilpSolution, ModelError, Status,
                    Variable)
from .mps import SolutionFormatError, export_mps, read_solution
from .solve import ExternalSolverError, SolverOptions, solve, solve_external, solve_highs
from .bnb import solve_bnb

__all__ = [
    "FEAS_TOL", "GAP_TOL", "INF", "INT_TOL", "MilpModel", "MilpSolution", "ModelError", "Status",
    "Variable", "SolutionFormatError", "export_mps", "read_solution", "ExternalSolverError",
    "SolverOptions", "solve", "solve_external", "solve_highs", "solve_bnb",
]
