"""External-solver executable backed by ``highspy``.

Usage::

    python -m metasurrogate.milp.highs_bridge MODEL.mps SOLUTION.txt [TIMELIMIT]

Reads the MPS file with HiGHS' own reader, solves it and writes the
``name value`` listing expected by the external backend, preceded by
``# status:`` and ``# bound:`` comment lines.  Handy as a command template:
``python -m metasurrogate.milp.highs_bridge {mps} {sol} {timelimit}``.
"""

from __future__ import annotations

import math
import sys


def run(mps_path: str, sol_path: str, time_limit: float | None = None) -> int:
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 1e-9)
    if time_limit is not None and math.isfinite(time_limit):
        h.setOptionValue("time_limit", float(time_limit))
    if h.readModel(mps_path) != highspy.HighsStatus.kOk:
        print(f"cannot read {mps_path}", file=sys.stderr)
        return 3
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    lines = []
    if status == highspy.HighsModelStatus.kOptimal:
        lines.append("# status: Optimal")
    if info.primal_solution_status >= 1:  # a feasible point exists
        bound = info.mip_dual_bound if h.getLp().integrality_ else info.objective_function_value
        if math.isfinite(bound):
            lines.append(f"# bound: {bound!r}")
        names = h.getLp().col_names_
        values = h.getSolution().col_value
        lines += [f"{n} {v!r}" for n, v in zip(names, values)]
    with open(sol_path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) not in (2, 3):
        print(__doc__, file=sys.stderr)
        return 2
    limit = float(args[2]) if len(args) == 3 else None
    return run(args[0], args[1], limit)


if __name__ == "__main__":
    sys.exit(main())
