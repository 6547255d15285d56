"""Bundled branch-and-bound over LP relaxations.

Node selection is best-bound, branching picks the most fractional integer
variable (lowest index on ties).  LP relaxations are solved with HiGHS' dual
simplex through :func:`scipy.optimize.linprog`.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import FEAS_TOL, GAP_TOL, INT_TOL, MilpModel, MilpSolution, Status, sense_sign


class _Relaxation:
    """LP relaxation in minimization form with per-node variable bounds."""

    def __init__(self, model: MilpModel):
        self.sign = sense_sign(model.sense)
        self.c = self.sign * model.objective_vector()
        self.const = model.objective_constant
        A = model.constraint_matrix()
        lo, hi = model.row_bounds()
        rel = np.asarray(model.relations)
        eq = rel == "=="
        le = rel == "<="
        ge = rel == ">="
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = hi[eq] if eq.any() else None
        if (le | ge).any():
            self.A_ub = sp.vstack([A[le], -A[ge]]).tocsr()
            self.b_ub = np.concatenate([hi[le], -lo[ge]])
        else:
            self.A_ub, self.b_ub = None, None

    def solve(self, lb: np.ndarray, ub: np.ndarray):
        """Return (status, x, minimization objective)."""
        bounds = np.column_stack([np.where(np.isinf(lb), None, lb),
                                  np.where(np.isinf(ub), None, ub)])
        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=bounds, method="highs-ds")
        if res.status == 0:
            return "optimal", res.x, float(res.fun)
        if res.status == 2:
            return "infeasible", None, math.inf
        if res.status == 3:
            return "unbounded", None, -math.inf
        return "error", None, math.nan


def _most_fractional(x: np.ndarray, ints: np.ndarray) -> int | None:
    frac = np.abs(x - np.round(x))
    frac[~ints] = 0.0
    j = int(np.argmax(frac))
    return j if frac[j] > INT_TOL else None


def solve_bnb(model: MilpModel, time_limit: float | None = None,
              gap_tol: float = GAP_TOL) -> MilpSolution:
    start = time.perf_counter()
    relax = _Relaxation(model)
    sign = relax.sign
    ints = model.integrality()
    lb0, ub0 = model.bounds()
    lb0 = np.where(ints, np.ceil(lb0 - INT_TOL), lb0)
    ub0 = np.where(ints, np.floor(ub0 + INT_TOL), ub0)
    if np.any(lb0 > ub0):
        return MilpSolution(Status.INFEASIBLE, None, math.nan, math.nan,
                            time.perf_counter() - start, message="empty integer domain")

    def out(status, x, inc, bound, nodes, root, history, msg=""):
        obj = sign * inc + relax.const if x is not None else math.nan
        bnd = sign * bound + relax.const if math.isfinite(bound) else sign * bound
        return MilpSolution(status, x, obj, bnd, time.perf_counter() - start, nodes,
                            sign * root + relax.const if math.isfinite(root) else sign * root,
                            [sign * v + relax.const for v in history], msg)

    status, x, val = relax.solve(lb0, ub0)
    if status == "infeasible":
        return out(Status.INFEASIBLE, None, math.inf, math.inf, 1, math.inf, [])
    if status == "unbounded":
        return out(Status.UNBOUNDED, None, math.inf, -math.inf, 1, -math.inf, [])
    if status == "error":
        return out(Status.ERROR, None, math.inf, math.nan, 1, math.nan, [],
                   "LP relaxation failed at the root")
    root = val

    incumbent_x: np.ndarray | None = None
    incumbent = math.inf
    history: list[float] = []
    counter = itertools.count()
    heap: list = []
    nodes = 1
    failures = 0

    def consider(x, val, lb, ub):
        nonlocal incumbent, incumbent_x
        j = _most_fractional(x, ints)
        if j is None:
            cand = np.where(ints, np.round(x), x) + 0.0
            cand_val = float(relax.c @ cand)
            if cand_val < incumbent - 1e-9 and model.max_violation(cand) <= 10 * FEAS_TOL:
                incumbent, incumbent_x = cand_val, cand
                history.append(cand_val)
            return
        heapq.heappush(heap, (val, next(counter), j, x[j], lb, ub))

    consider(x, val, lb0, ub0)
    timed_out = False
    pruned_bound = math.inf
    while heap:
        if heap[0][0] >= incumbent - gap_tol:
            pruned_bound = heap[0][0]
            heap.clear()
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            timed_out = True
            break
        _, _, j, xj, lb, ub = heapq.heappop(heap)
        for side in (0, 1):
            clb, cub = lb.copy(), ub.copy()
            if side == 0:
                cub[j] = math.floor(xj)
            else:
                clb[j] = math.ceil(xj)
            nodes += 1
            status, cx, cval = relax.solve(clb, cub)
            if status == "optimal":
                if cval < incumbent - gap_tol:
                    consider(cx, cval, clb, cub)
            elif status != "infeasible":
                failures += 1

    bound = min(heap[0][0] if heap else pruned_bound, incumbent)
    if incumbent_x is None:
        if timed_out:
            return out(Status.NO_SOLUTION, None, math.inf, bound, nodes, root, history,
                       "time limit reached without incumbent")
        if failures:
            return out(Status.ERROR, None, math.inf, math.nan, nodes, root, history,
                       f"{failures} node LPs failed")
        return out(Status.INFEASIBLE, None, math.inf, math.inf, nodes, root, history)
    if not timed_out and not failures:
        return out(Status.OPTIMAL, incumbent_x, incumbent, bound, nodes, root, history)
    msg = "time limit reached" if timed_out else f"{failures} node LPs failed"
    return out(Status.FEASIBLE, incumbent_x, incumbent, bound, nodes, root, history, msg)
