from __future__ import annotations

import math
import re

import numpy as np

from .model import MAX, MilpModel, MilpSolution, ModelError, Status

_SAFE = re.compile(r"^[^\s$*][^\s]{0,254}$")


class SolutionFormatError(ValueError):
    pass


def _num(v: float) -> str:
    return repr(float(v))


def _check_names(names: list[str], kind: str) -> None:
    seen: set[str] = set()
    for name in names:
        if not _SAFE.match(name):
            raise ModelError(f"{kind} name {name!r} is not MPS-safe")
        if name in seen:
            raise ModelError(f"duplicate {kind} name {name!r}")
        seen.add(name)


def export_mps(model: MilpModel) -> str:
    """Free-format MPS text.  Maximization objectives are written negated."""
    var_names = [v.name for v in model.variables]
    _check_names(var_names, "variable")
    _check_names(model.row_names, "row")
    if "OBJ" in model.row_names:
        raise ModelError("row name 'OBJ' is reserved for the objective")

    flip = -1.0 if model.sense == MAX else 1.0
    lines = [f"NAME {model.name}"]
    if flip < 0:
        lines.append("* objective negated: original sense is max")
    lines.append("ROWS")
    lines.append(" N OBJ")
    kind = {"<=": "L", ">=": "G", "==": "E"}
    for name, rel in zip(model.row_names, model.relations):
        lines.append(f" {kind[rel]} {name}")

    columns: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, a in model.objective.items():
        if a != 0:
            columns[j].append(("OBJ", flip * a))
    for i in range(model.n_constraints):
        idx, val = model.row(i)
        for j, a in zip(idx, val):
            columns[j].append((model.row_names[i], a))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for var, entries in zip(model.variables, columns):
        if var.integer != in_int:
            tag = "INTORG" if var.integer else "INTEND"
            lines.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += 1
            in_int = var.integer
        if not entries:
            entries = [("OBJ", 0.0)]
        for row, a in entries:
            lines.append(f"    {var.name} {row} {_num(a)}")
    if in_int:
        lines.append(f"    MARKER{marker} 'MARKER' 'INTEND'")

    lines.append("RHS")
    for name, rhs in zip(model.row_names, model.rhs):
        if rhs != 0:
            lines.append(f"    RHS {name} {_num(rhs)}")

    lines.append("BOUNDS")
    for var in model.variables:
        lb, ub, n = var.lb, var.ub, var.name
        if var.is_binary:
            lines.append(f" BV BND {n}")
        elif lb == ub:
            lines.append(f" FX BND {n} {_num(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            lines.append(f" FR BND {n}")
        else:
            if math.isinf(lb):
                lines.append(f" MI BND {n}")
            elif lb != 0 or var.integer:
                lines.append(f" LO BND {n} {_num(lb)}")
            if math.isinf(ub):
                if var.integer:
                    lines.append(f" PL BND {n}")
            else:
                lines.append(f" UP BND {n} {_num(ub)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def read_solution(model: MilpModel, text: str) -> MilpSolution:
    """Assemble a solution from ``name value`` lines.

    Blank lines and lines starting with ``#`` are skipped.  Variables missing
    from the listing take their lower bound (0 if unbounded below).
    """
    index = {v.name: j for j, v in enumerate(model.variables)}
    lb, _ = model.bounds()
    x = np.where(np.isinf(lb), 0.0, lb)
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise SolutionFormatError(f"line {lineno}: expected 'name value', got {line!r}")
        name, raw = parts
        try:
            value = float(raw)
        except ValueError:
            raise SolutionFormatError(f"line {lineno}: {raw!r} is not a number") from None
        if name not in index:
            unknown.append(name)
            continue
        x[index[name]] = value
    if unknown:
        raise SolutionFormatError(f"unknown variable names: {', '.join(unknown[:10])}"
                                  + (" ..." if len(unknown) > 10 else ""))
    return MilpSolution(Status.FEASIBLE, x, model.objective_value(x), math.nan, 0.0)
