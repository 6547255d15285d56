"""Command-line front end: ``metasurrogate {generate,train,evaluate,bench}``.

``generate`` writes a problem directory: the instance (knapsack JSON or graph
JSON), ``train.csv`` and ``test.csv`` scenario tables and a ``problem.json``
manifest tying them together.  ``train`` and ``evaluate`` take that manifest.

Exit codes: 0 success, 2 usage, 3 bad input, 4 solver failure, 5 some
benchmark rows failed, 1 anything else.  Errors are printed to stderr as
``error: category=<name> message=<text>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import DegenerateScale, ScenarioSet, SurrogateTree, aggregate, scaled_objective
from .experiments import (PRESETS, BenchmarkConfig, base_costs, gen_grid, gen_knapsack,
                          gen_network, grid_layers, parse_method, plot_data, run_benchmark,
                          sample_costs, summarize, write_report)
from .heuristics import (TrainingError, best_single_meta, best_single_micro, evaluate_tree,
                         learn_heuristic, m2m, train_micro, train_mip)
from .knapsack import KnapsackInstance, KnapsackProblem
from .milp import SolverOptions
from .milp.solve import SOLVER_ENV, ExternalSolverError
from .shortest_path import DistrictGraph, ShortestPathProblem, load_scenarios_csv, save_scenarios_csv

log = logging.getLogger("metasurrogate")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER, EXIT_PARTIAL = 0, 1, 2, 3, 4, 5
TRAIN_METHODS = ("mip", "micro", "lh", "m2m", "meta1", "micro1")


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category, self.code = category, code


def _input_error(message: str) -> CliError:
    return CliError("input", message, EXIT_INPUT)


# ---------------------------------------------------------------------------
# argument types


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _power_of_two(text: str) -> int:
    value = _positive_int(text)
    if value & (value - 1):
        raise argparse.ArgumentTypeError(f"leaf count must be a power of two, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--solver", choices=("highs", "bnb"),
                       help="bundled backend (default: highs, or the external command in "
                            f"${SOLVER_ENV} when set)")
    group.add_argument("--solver-cmd", metavar="TEMPLATE",
                       help="external MPS solver command with {mps} {sol} {timelimit} placeholders")
    p.add_argument("--time-limit", type=_positive_float, metavar="SEC",
                   help="MILP time limit in seconds")


def _solver(args) -> SolverOptions:
    if args.solver_cmd:
        return SolverOptions("external", args.time_limit, command=args.solver_cmd)
    if args.solver:
        return SolverOptions(args.solver, args.time_limit)
    if os.environ.get(SOLVER_ENV):
        return SolverOptions("external", args.time_limit, command=os.environ[SOLVER_ENV])
    return SolverOptions("highs", args.time_limit)


# ---------------------------------------------------------------------------
# problem directories


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n")


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise _input_error(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise _input_error(f"{path}: invalid JSON ({exc})") from None


def load_problem(manifest_path: str | Path, solver: SolverOptions | None = None,
                 n_layers: int | None = None):
    """Problem object, training and test scenarios and feature mask from a manifest."""
    manifest_path = Path(manifest_path)
    doc = _read_json(manifest_path)
    base = manifest_path.parent
    try:
        kind = doc["kind"]
        train, _ = load_scenarios_csv(base / doc["train"])
        test, _ = load_scenarios_csv(base / doc["test"]) if doc.get("test") else (None, None)
        if kind == "knapsack":
            inst_doc = _read_json(base / doc["instance"])
            problem = KnapsackProblem(KnapsackInstance(inst_doc["weights"], inst_doc["capacity"],
                                                       inst_doc["categories"]), solver)
        elif kind in ("grid", "network"):
            graph = DistrictGraph.load(base / doc["graph"])
            layers = n_layers if n_layers is not None else doc.get("layers")
            problem = ShortestPathProblem(graph, layers, solver)
        else:
            raise _input_error(f"unknown problem kind {kind!r}")
    except (KeyError, ValueError) as exc:
        raise _input_error(f"{manifest_path}: {exc}") from None
    except FileNotFoundError as exc:
        raise _input_error(f"missing file: {exc.filename}") from None
    return problem, train, test, doc.get("feature_mask")


def cmd_generate(args) -> int:
    out = Path(args.out)
    expected = {"knapsack": 2, "grid": 2, "network": 3}[args.kind]
    if args.sizes and len(args.sizes) != expected:
        args.parser.error(f"{args.kind} takes {expected} sizes, got {len(args.sizes)}")
    rng = np.random.default_rng(args.seed)
    manifest = {"kind": args.kind, "seed": args.seed, "train": "train.csv", "test": "test.csv"}
    if args.kind == "knapsack":
        n, f_s = args.sizes or (16, 4)
        if not 1 <= f_s <= n:
            args.parser.error(f"categories must lie in [1, {n}]")
        inst = gen_knapsack(n, f_s, rng)
        bases = base_costs(n, rng)
        train = sample_costs(bases, args.scenarios, rng, args.delta)[0]
        test = sample_costs(bases, args.test_size, rng, args.delta)[0]
        train, test, context = ScenarioSet(train, train), ScenarioSet(test, test), ()
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "instance.json", inst.to_dict())
        manifest.update(instance="instance.json", delta=args.delta)
        dimension = n
    elif args.kind == "grid":
        n, f_s = args.sizes or (9, 9)
        side = math.isqrt(f_s)
        if side * side != f_s or n % side:
            args.parser.error(f"{f_s} square districts cannot tile a {n}x{n} grid")
        graph = gen_grid(n, f_s)
        bases = base_costs(graph.n_edges, rng)
        train = sample_costs(bases, args.scenarios, rng, args.delta)[0]
        test = sample_costs(bases, args.test_size, rng, args.delta)[0]
        train, test, context = ScenarioSet(train, train), ScenarioSet(test, test), ()
        manifest.update(graph="graph.json", layers=grid_layers(f_s), delta=args.delta)
        dimension = graph.n_edges
    else:
        nodes, edges, districts = args.sizes or (538, 1308, 11)
        try:
            graph, traffic = gen_network(nodes, edges, districts, rng, args.noise)
        except ValueError as exc:
            args.parser.error(str(exc))
        train = traffic.sample(args.scenarios, rng)
        test = traffic.sample(args.test_size, rng)
        context = ("weekday", "hour")
        manifest.update(graph="graph.json", noise=args.noise,
                        feature_mask=[graph.n_edges, graph.n_edges + 1])
        dimension = graph.n_edges
    out.mkdir(parents=True, exist_ok=True)
    if args.kind != "knapsack":
        graph.save(out / "graph.json")
    save_scenarios_csv(out / "train.csv", train, dimension, context)
    save_scenarios_csv(out / "test.csv", test, dimension, context)
    _write_json(out / "problem.json", manifest)
    print(out / "problem.json")
    return EXIT_OK


def _leaves(args) -> int:
    if args.method in ("meta1", "micro1"):
        return 1
    if args.depth is not None:
        return 2 ** args.depth
    return args.leaves


def cmd_train(args) -> int:
    solver = _solver(args)
    problem, train, _, mask = load_problem(args.problem, solver, args.layers)
    k = _leaves(args)
    depth = int(math.log2(k))
    if args.method == "lh" and k == 1:
        args.parser.error("the learning heuristic needs at least two leaves")
    run = {
        "mip": lambda: train_mip(problem, train, depth, solver, feature_mask=mask),
        "micro": lambda: train_micro(problem, train, depth, solver, feature_mask=mask),
        "lh": lambda: learn_heuristic(problem, train, depth, solver=solver, feature_mask=mask),
        "m2m": lambda: m2m(problem, train, depth, solver, feature_mask=mask),
        "meta1": lambda: best_single_meta(problem, train, solver),
        "micro1": lambda: best_single_micro(problem, train, solver=solver),
    }[args.method]
    result = run()
    values = evaluate_tree(problem, result.tree, train)
    doc = {
        "method": args.method, "K": k, "status": result.status,
        "objective": _json_float(result.objective), "bound": _json_float(result.bound),
        "seconds": result.seconds,
        "train_objective": aggregate("laplace", values, train.probabilities),
        "tree": result.tree.to_dict(),
    }
    _write_json(Path(args.out), doc)
    print(f"{args.method} K={k} status={result.status} train_objective="
          f"{doc['train_objective']:.6g} seconds={result.seconds:.2f} -> {args.out}")
    return EXIT_OK


def _json_float(v: float):
    return None if v is None or math.isnan(v) else float(v)


def _load_tree(path: str | Path) -> tuple[SurrogateTree, dict]:
    doc = _read_json(path)
    meta = {k: v for k, v in doc.items() if k != "tree"}
    try:
        return SurrogateTree.from_dict(doc.get("tree", doc)), meta
    except (KeyError, ValueError, TypeError) as exc:
        raise _input_error(f"{path}: not a tree document ({exc})") from None


def cmd_evaluate(args) -> int:
    problem, train, test, _ = load_problem(args.problem, _solver(args))
    tree, meta = _load_tree(args.tree)
    if args.scenarios:
        try:
            test, _ = load_scenarios_csv(args.scenarios)
        except (OSError, ValueError, KeyError) as exc:
            raise _input_error(f"{args.scenarios}: {exc}") from None
    if test is None:
        test = train
    for name, sc in (("training", train), ("evaluation", test)):
        if sc.n_features != train.n_features:
            raise _input_error(f"{name} scenarios have {sc.n_features} features, the tree "
                               f"was trained on {train.n_features}")
    tr = float(train.probabilities @ evaluate_tree(problem, tree, train))
    te = float(test.probabilities @ evaluate_tree(problem, tree, test))
    scaled_tr = scaled_te = math.nan
    if args.no_anchors:
        log.warning("anchors not computed; scaled columns are empty")
    else:
        micro1 = best_single_micro(problem, train).tree
        anchors = [(float(s.probabilities @ evaluate_tree(problem, micro1, s)),
                    float(s.probabilities @ problem.nominal_values(s.costs))) for s in (train, test)]
        try:
            scaled_tr = scaled_objective(tr, *anchors[0])
            scaled_te = scaled_objective(te, *anchors[1])
        except DegenerateScale:
            log.warning("MICRO1 and OPT coincide; reporting raw objectives only")
    method = str(meta.get("method", tree.metadata.get("method", "tree")))
    row = {"run_id": Path(args.problem).parent.name or "problem", "method": method.upper(),
           "K": tree.n_leaves, "problem": getattr(problem, "name", "?"), "axis_value": "",
           "obj_train_raw": tr, "obj_train_scaled": scaled_tr, "obj_test_raw": te,
           "obj_test_scaled": scaled_te, "time_s": float(meta.get("seconds", math.nan)),
           "status": str(meta.get("status", ""))}
    write_report(args.out or sys.stdout, [row])
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _expand_methods(spec: str, preset_methods: tuple) -> tuple:
    """``lh,meta1`` style lists; a bare family takes the leaf counts of the preset (else 2)."""
    methods = []
    for item in (s.strip() for s in spec.split(",")):
        if not item:
            continue
        upper = item.upper()
        if upper in ("MIP", "MICRO", "LH", "M2M"):
            ks = sorted({parse_method(m)[1] for m in preset_methods
                         if parse_method(m)[0] == upper}) or [2]
            methods += [f"{upper}{k}" for k in ks]
        else:
            parse_method(upper)
            methods.append(upper)
    return tuple(dict.fromkeys(methods))


def _bench_config(args) -> BenchmarkConfig:
    if args.config:
        try:
            config = BenchmarkConfig.from_dict(_read_json(args.config))
        except (TypeError, ValueError) as exc:
            raise _input_error(f"{args.config}: {exc}") from None
    else:
        config = PRESETS[args.preset]
    changes = {}
    if args.methods:
        try:
            changes["methods"] = _expand_methods(args.methods, config.methods)
        except ValueError as exc:
            args.parser.error(str(exc))
    for flag, key in (("runs", "runs"), ("seed", "seed"), ("time_limit", "time_limit"),
                      ("test_size", "test_size")):
        if getattr(args, flag) is not None:
            changes[key] = getattr(args, flag)
    if args.solver_cmd:
        changes.update(backend="external", solver_command=args.solver_cmd)
    elif args.solver:
        changes.update(backend=args.solver, solver_command=None)
    elif os.environ.get(SOLVER_ENV) and config.backend == "highs":
        changes.update(backend="external", solver_command=os.environ[SOLVER_ENV])
    return replace(config, **changes)


def cmd_bench(args) -> int:
    config = _bench_config(args)
    if args.dump_config:
        print(json.dumps(config.to_dict(), indent=1))
        return EXIT_OK
    rows = run_benchmark(config, args.out, jobs=args.jobs, resume=not args.no_resume)
    if args.plot_data:
        _write_json(Path(args.plot_data), plot_data(rows))
    print(f"{'value':>6} {'method':<8} {'train':>7} {'test':>7} {'time_s':>8} runs")
    for (value, method), s in summarize(rows).items():
        print(f"{value:>6} {method:<8} {s['train']:7.3f} {s['test']:7.3f} {s['time']:8.2f} "
              f"{s['runs']}")
    failed = [r for r in rows if str(r["status"]).startswith("Error")]
    if failed:
        print(f"error: category=partial message={len(failed)} of {len(rows)} rows failed",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metasurrogate",
        description="Train and benchmark decision-tree surrogates that output meta-solutions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random problem directory")
    gen.add_argument("kind", choices=("knapsack", "grid", "network"))
    gen.add_argument("sizes", nargs="*", type=_positive_int,
                     help="knapsack: ITEMS CATEGORIES; grid: SIDE DISTRICTS; "
                          "network: NODES EDGES DISTRICTS")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scenarios", type=_positive_int, default=10, help="training scenarios")
    gen.add_argument("--test-size", type=_positive_int, default=50)
    gen.add_argument("--delta", type=float, default=0.25,
                     help="relative spread around the base costs (knapsack, grid)")
    gen.add_argument("--noise", type=float, default=0.5,
                     help="relative travel-time noise (network)")
    gen.add_argument("--out", required=True, metavar="DIR")
    gen.set_defaults(func=cmd_generate, parser=gen)

    tr = sub.add_parser("train", help="train one method and write the tree as JSON")
    tr.add_argument("problem", metavar="PROBLEM_JSON")
    tr.add_argument("--method", choices=TRAIN_METHODS, required=True)
    size = tr.add_mutually_exclusive_group()
    size.add_argument("--leaves", "-K", type=_power_of_two, default=2)
    size.add_argument("--depth", "-Q", type=_nonneg_int)
    tr.add_argument("--layers", type=_positive_int, metavar="DELTA",
                    help="maximum district-sequence length (shortest path)")
    tr.add_argument("--out", required=True, metavar="TREE_JSON")
    _add_solver_flags(tr)
    tr.set_defaults(func=cmd_train, parser=tr)

    ev = sub.add_parser("evaluate", help="score a tree; writes one CSV report row")
    ev.add_argument("problem", metavar="PROBLEM_JSON")
    ev.add_argument("tree", metavar="TREE_JSON")
    ev.add_argument("--scenarios", metavar="CSV",
                    help="evaluation scenarios (default: the problem's test set)")
    ev.add_argument("--no-anchors", action="store_true",
                    help="skip the MICRO1/OPT anchors and report raw objectives only")
    ev.add_argument("--out", metavar="CSV")
    _add_solver_flags(ev)
    ev.set_defaults(func=cmd_evaluate, parser=ev)

    be = sub.add_parser("bench", help="run a benchmark preset or JSON config")
    src = be.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), default="smoke")
    src.add_argument("--config", metavar="JSON", help="benchmark config mirroring the flags")
    be.add_argument("--methods", help="comma list, e.g. lh,meta1 or MIP2,M2M4")
    be.add_argument("--runs", type=_positive_int)
    be.add_argument("--seed", type=int)
    be.add_argument("--test-size", type=_positive_int)
    be.add_argument("--jobs", type=_positive_int, default=1)
    be.add_argument("--out", metavar="CSV", help="report file; completed runs are reused")
    be.add_argument("--no-resume", action="store_true", help="recompute every run")
    be.add_argument("--plot-data", metavar="JSON", help="also write values grouped by method")
    be.add_argument("--dump-config", action="store_true",
                    help="print the effective config as JSON and exit")
    _add_solver_flags(be)
    be.set_defaults(func=cmd_bench, parser=be)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        category, message, code = exc.category, str(exc), exc.code
    except (TrainingError, ExternalSolverError) as exc:
        category, message, code = "solver", str(exc), EXIT_SOLVER
    except (ValueError, OSError) as exc:
        category, message, code = "input", str(exc), EXIT_INPUT
    except Exception as exc:  # pragma: no cover - last resort
        category, message, code = "internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL
    print(f"error: category={category} message={message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
