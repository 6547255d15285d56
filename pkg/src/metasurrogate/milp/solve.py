from __future__ import annotations

import math
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .bnb import solve_bnb
from .model import FEAS_TOL, GAP_TOL, MilpModel, MilpSolution, Status, sense_sign
from .mps import export_mps, read_solution

BACKENDS = ("highs", "bnb", "external")

SOLVER_ENV = "METASURROGATE_SOLVER"


@dataclass(frozen=True)
class SolverOptions:
    """Which MILP backend to use and how long it may run.

    ``backend`` is ``"highs"`` (scipy's HiGHS MIP), ``"bnb"`` (the bundled
    branch-and-bound) or ``"external"`` (write MPS, run ``command``, read a
    name/value solution file).  ``command`` is a template with ``{mps}``,
    ``{sol}`` and ``{timelimit}`` placeholders.
    """

    backend: str = "highs"
    time_limit: float | None = None
    gap_tol: float = GAP_TOL
    command: str | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.backend == "external" and not (self.command or os.environ.get(SOLVER_ENV)):
            raise ValueError(f"external backend needs a command template or ${SOLVER_ENV}")

    def replace(self, **kw) -> "SolverOptions":
        d = dict(backend=self.backend, time_limit=self.time_limit, gap_tol=self.gap_tol,
                 command=self.command)
        d.update(kw)
        return SolverOptions(**d)


def solve(model: MilpModel, options: SolverOptions | None = None, **kw) -> MilpSolution:
    """Solve ``model``; keyword arguments override fields of ``options``."""
    options = (options or SolverOptions()).replace(**kw) if kw else (options or SolverOptions())
    if options.backend == "bnb":
        return solve_bnb(model, options.time_limit, options.gap_tol)
    if options.backend == "external":
        return solve_external(model, options.command or os.environ[SOLVER_ENV],
                              options.time_limit)
    return solve_highs(model, options.time_limit)


def solve_highs(model: MilpModel, time_limit: float | None = None) -> MilpSolution:
    start = time.perf_counter()
    sign = 1.0 if model.sense == "min" else -1.0
    c = sign * model.objective_vector()
    lb, ub = model.bounds()
    constraints = []
    if model.n_constraints:
        lo, hi = model.row_bounds()
        constraints.append(LinearConstraint(model.constraint_matrix(), lo, hi))
    # HiGHS' default absolute gap (1e-6) is the effective stopping rule
    opts = {"mip_rel_gap": 1e-9}
    if time_limit is not None:
        opts["time_limit"] = float(time_limit)
    res = milp(c, constraints=constraints, integrality=model.integrality().astype(int),
               bounds=Bounds(lb, ub), options=opts)
    seconds = time.perf_counter() - start
    const = model.objective_constant
    bound = getattr(res, "mip_dual_bound", None)
    bound = sign * bound + const if bound is not None and np.isfinite(bound) else math.nan
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.x is not None:
        x = np.asarray(res.x, dtype=float)
        ints = model.integrality()
        x[ints] = np.round(x[ints]) + 0.0
        obj = model.objective_value(x)
        status = Status.OPTIMAL if res.status == 0 else Status.FEASIBLE
        if status is Status.OPTIMAL and math.isnan(bound):
            bound = obj
        return MilpSolution(status, x, obj, bound, seconds, nodes, message=res.message)
    if res.status == 2:
        return MilpSolution(Status.INFEASIBLE, None, math.nan, math.nan, seconds, nodes,
                            message=res.message)
    if res.status == 3:
        return MilpSolution(Status.UNBOUNDED, None, math.nan, math.nan, seconds, nodes,
                            message=res.message)
    if res.status == 1:
        return MilpSolution(Status.NO_SOLUTION, None, math.nan, bound, seconds, nodes,
                            message=res.message)
    return MilpSolution(Status.ERROR, None, math.nan, math.nan, seconds, nodes, message=res.message)


class ExternalSolverError(RuntimeError):
    pass


def solve_external(model: MilpModel, command: str, time_limit: float | None = None,
                   workdir: str | Path | None = None) -> MilpSolution:
    """Run an MPS-reading solver given as a command template.

    The executable must write a plain ``name value`` listing to ``{sol}``.  An
    empty listing is treated as "no solution found".  Without a dual bound from
    the external tool the result is reported as ``Feasible``.
    """
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        mps_path = Path(tmp) / f"{model.name}.mps"
        sol_path = Path(tmp) / f"{model.name}.sol"
        mps_path.write_text(export_mps(model))
        tl = "1e30" if time_limit is None else repr(float(time_limit))
        argv = [part.format(mps=str(mps_path), sol=str(sol_path), timelimit=tl)
                for part in shlex.split(command)]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExternalSolverError(f"{argv[0]} exited with {proc.returncode}: "
                                      f"{proc.stderr.strip()[-500:]}")
        text = sol_path.read_text() if sol_path.exists() else ""
    seconds = time.perf_counter() - start
    if not text.strip():
        return MilpSolution(Status.NO_SOLUTION, None, math.nan, math.nan, seconds,
                            message="external solver wrote no solution")
    sol = read_solution(model, text)
    if model.max_violation(sol.values) > 1e3 * FEAS_TOL:
        raise ExternalSolverError("external solution violates the model")
    sol.seconds = seconds
    # optional "# status: Optimal" / "# bound: <value>" comment lines
    for line in text.splitlines():
        m = re.match(r"\s*#\s*(status|bound)\s*:\s*(\S+)", line, re.IGNORECASE)
        if not m:
            continue
        if m.group(1).lower() == "status" and m.group(2).lower() == "optimal":
            sol.status = Status.OPTIMAL
        elif m.group(1).lower() == "bound":
            # reported for the exported (minimization, constant-free) objective
            sol.bound = sense_sign(model.sense) * float(m.group(2)) + model.objective_constant
    if sol.status is Status.OPTIMAL and math.isnan(sol.bound):
        sol.bound = sol.objective
    return sol
