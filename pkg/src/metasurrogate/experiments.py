"""Instance generators and the benchmark protocol.

A benchmark run generates one instance with training and test scenarios,
trains every requested method, evaluates the trees on both sets and scales
the objectives between the MICRO1 anchor (0) and the per-scenario optimum (1).
"""

from __future__ import annotations

import csv
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay

from .core import MAX, DegenerateScale, ScenarioSet, aggregate, scaled_objective
from .heuristics import (TrainResult, best_single_meta, best_single_micro, evaluate_tree,
                         learn_heuristic, m2m, train_micro, train_mip)
from .knapsack import KnapsackInstance, KnapsackProblem, even_categories
from .milp import SolverOptions
from .shortest_path import DistrictGraph, ShortestPathProblem, shortest_path

log = logging.getLogger(__name__)

PROBLEMS = ("knapsack", "grid", "network")
AXES = ("n", "N", "F_S", "grid")
CSV_FIELDS = ("run_id", "method", "K", "problem", "axis_value", "obj_train_raw",
              "obj_train_scaled", "obj_test_raw", "obj_test_scaled", "time_s", "status")
METHOD_RE = re.compile(r"^(MIP|MICRO|LH|M2M)(\d+)$")


# ---------------------------------------------------------------------------
# cost scenarios


def base_costs(dimension: int, rng: np.random.Generator, n_bases: int = 3) -> np.ndarray:
    """Base cost vectors drawn uniformly from [0.1, 10]."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    return rng.uniform(0.1, 10.0, size=(n_bases, dimension))


def sample_costs(bases: np.ndarray, count: int, rng: np.random.Generator,
                 delta: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Each scenario picks a base uniformly and perturbs every entry by up to ``delta``.

    Returns ``(costs, base_index)``.
    """
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    which = rng.integers(0, bases.shape[0], size=count)
    scale = rng.uniform(1.0 - delta, 1.0 + delta, size=(count, bases.shape[1]))
    return bases[which] * scale, which


def gen_cost_scenarios(dimension: int, count: int, seed: int, delta: float = 0.25) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return sample_costs(base_costs(dimension, rng), count, rng, delta)[0]


# ---------------------------------------------------------------------------
# knapsack


def gen_knapsack(n: int, n_categories: int, seed: int | np.random.Generator) -> KnapsackInstance:
    """Weights uniform in [0.1, 10], capacity half the total weight, contiguous categories."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 10.0, size=n)
    return KnapsackInstance(w, 0.5 * float(w.sum()), even_categories(n, n_categories))


# ---------------------------------------------------------------------------
# grids


def grid_layers(n_districts: int) -> int:
    """Length of every district sequence on a square grid split into square districts."""
    side = math.isqrt(n_districts)
    if side * side != n_districts:
        raise ValueError(f"{n_districts} districts do not form a square")
    return 2 * side - 1


def gen_grid(n: int, n_districts: int) -> DistrictGraph:
    """``n`` x ``n`` grid with edges pointing east and north.

    Node ``y * n + x`` sits in column ``x`` and row ``y``; the source is the
    south-west corner, the sink the north-east corner.  Districts are square
    blocks numbered row by row from the south-west.
    """
    side = math.isqrt(n_districts)
    if side * side != n_districts or n % side:
        raise ValueError(f"{n_districts} square districts cannot tile a {n}x{n} grid")
    block = n // side
    nodes = tuple(range(n * n))
    district = {y * n + x: (y // block) * side + x // block for y in range(n) for x in range(n)}
    edges = []
    for y in range(n):
        for x in range(n):
            if x + 1 < n:
                edges.append((y * n + x, y * n + x + 1))
            if y + 1 < n:
                edges.append((y * n + x, (y + 1) * n + x))
    return DistrictGraph(nodes, tuple(edges), district, 0, n * n - 1)


# ---------------------------------------------------------------------------
# road-network-like graphs with traffic regimes

REGIMES = ("light", "moderate", "dense", "heavy")
DAY_START, DAY_END = 6, 22    # trips start between 6:00 and 21:59


def traffic_regime(weekday: int, hour: int) -> int:
    """Regime index for a weekday (0 = Monday) and hour of the day.

    Weekends are light; weekdays are heavy in the morning, moderate around
    midday and dense from the afternoon on.
    """
    if weekday >= 5:
        return 0
    if hour < 10:
        return 3
    if hour < 16:
        return 1
    return 2


@dataclass(frozen=True)
class TrafficModel:
    """Edge travel times: length times a regime slowdown times random noise."""

    lengths: np.ndarray
    slowdown: np.ndarray     # (regimes, edges), >= 1
    noise: float = 0.5

    def sample(self, count: int, rng: np.random.Generator) -> ScenarioSet:
        """Scenarios whose features are the edge costs followed by weekday and hour."""
        weekday = rng.integers(0, 7, size=count)
        hour = rng.integers(DAY_START, DAY_END, size=count)
        regime = np.array([traffic_regime(d, h) for d, h in zip(weekday, hour)])
        noise = rng.uniform(1.0 - self.noise, 1.0 + self.noise, size=(count, self.lengths.size))
        costs = self.lengths[None, :] * self.slowdown[regime] * noise
        feats = np.hstack([costs, weekday[:, None], hour[:, None]]).astype(float)
        return ScenarioSet(feats, costs)


def gen_network(n_nodes: int = 538, n_edges: int = 1308, n_districts: int = 11,
                seed: int | np.random.Generator = 0, noise: float = 0.5
                ) -> tuple[DistrictGraph, TrafficModel]:
    """Planar street network with bidirected roads, compact districts and traffic regimes.

    Nodes are random points in the unit square.  Roads are the Euclidean
    spanning tree plus further Delaunay edges drawn at random (shorter ones
    more likely) until ``n_edges / 2`` roads exist; each road becomes two
    directed edges.  Districts are k-means clusters of the points.  The
    source is the node closest to the north-west corner, the sink the one
    closest to the south-east.

    Travel times are ten times the road length plus 0.1.  Busier regimes slow
    down the inside of one district on the free-flow route (extra factor 1.5,
    3 and 5), so the best district sequence depends on the regime.
    """
    if n_edges % 2:
        raise ValueError("edge count must be even (every road is bidirected)")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
    cand = set()
    for simplex in Delaunay(pts).simplices:
        for a in range(3):
            u, v = sorted((int(simplex[a]), int(simplex[(a + 1) % 3])))
            cand.add((u, v))
    cand = sorted(cand)
    n_roads = n_edges // 2
    if not n_nodes - 1 <= n_roads <= len(cand):
        raise ValueError(f"cannot place {n_roads} roads on {n_nodes} nodes")
    length = {e: float(np.linalg.norm(pts[e[0]] - pts[e[1]])) for e in cand}
    rows, cols = zip(*cand)
    mat = coo_matrix(([length[e] for e in cand], (rows, cols)), shape=(n_nodes, n_nodes))
    mst = minimum_spanning_tree(mat).tocoo()
    roads = {tuple(sorted((int(a), int(b)))) for a, b in zip(mst.row, mst.col)}
    rest = [e for e in cand if e not in roads]
    weight = np.array([1.0 / length[e] for e in rest])
    extra = rng.choice(len(rest), n_roads - len(roads), replace=False, p=weight / weight.sum())
    roads = sorted(roads | {rest[i] for i in extra})

    _, labels = kmeans2(pts, n_districts, seed=rng, minit="++")
    source = int(np.argmin(np.linalg.norm(pts - [0.0, 1.0], axis=1)))
    sink = int(np.argmin(np.linalg.norm(pts - [1.0, 0.0], axis=1)))
    edges = [e for u, v in roads for e in ((u, v), (v, u))]
    graph = DistrictGraph(tuple(range(n_nodes)), tuple(edges),
                          {i: int(labels[i]) for i in range(n_nodes)}, source, sink)

    lengths = 10.0 * np.array([length[tuple(sorted(e))] for e in edges]) + 0.1
    free_flow = graph.district_sequence(shortest_path(graph, lengths)[0].nodes).districts
    inner = list(free_flow[1:-1]) or list(free_flow)
    d = graph.node_district
    slowdown = np.ones((len(REGIMES), len(edges)))
    for r, strength in enumerate((0.0, 1.5, 3.0, 5.0)):
        if strength:
            f = inner[(r - 1) % len(inner)]
            slowdown[r, (d[graph.tail] == f) & (d[graph.head] == f)] += strength
    return graph, TrafficModel(lengths, slowdown, noise)


def save_network(graph: DistrictGraph, scenarios: ScenarioSet, graph_path: str | Path,
                 scenario_path: str | Path) -> None:
    from .shortest_path import save_scenarios_csv
    graph.save(graph_path)
    save_scenarios_csv(scenario_path, scenarios, graph.n_edges, ("weekday", "hour"))


def load_network(graph_path: str | Path, scenario_path: str | Path
                 ) -> tuple[DistrictGraph, ScenarioSet, list[int]]:
    """Read a user-supplied network; returns the graph, scenarios and context feature columns."""
    from .shortest_path import load_scenarios_csv
    graph = DistrictGraph.load(graph_path)
    scenarios, names = load_scenarios_csv(scenario_path)
    context = list(range(graph.n_edges, graph.n_edges + len(names)))
    return graph, scenarios, context


# ---------------------------------------------------------------------------
# benchmark configuration


def parse_method(name: str) -> tuple[str, int]:
    """``"LH4"`` -> ``("LH", 4)``; leaf counts must be powers of two."""
    if name in ("OPT", "META1", "MICRO1"):
        return name, 1
    m = METHOD_RE.match(name)
    if not m:
        raise ValueError(f"unknown method {name!r}")
    k = int(m.group(2))
    if k < 1 or k & (k - 1):
        raise ValueError(f"{name}: leaf count must be a power of two")
    return m.group(1), k


@dataclass(frozen=True)
class BenchmarkConfig:
    problem: str = "knapsack"
    axis: str = "F_S"
    axis_values: tuple = (4,)
    methods: tuple = ("OPT", "MICRO1", "META1", "MIP2", "MIP4", "MICRO2", "MICRO4",
                      "LH2", "LH4", "M2M2", "M2M4")
    runs: int = 20
    seed: int = 0
    n_items: int = 16
    n_scenarios: int = 10
    n_features: int = 4
    grid_n: int = 9
    test_size: int = 50
    time_limit: float | None = 120.0
    delta: float = 0.25
    backend: str = "highs"
    solver_command: str | None = None
    network_nodes: int = 538
    network_edges: int = 1308
    network_noise: float = 0.5
    eval_time_limit: float = 10.0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; choose from {AXES}")
        object.__setattr__(self, "axis_values", tuple(self.axis_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            parse_method(m)
        if self.runs < 1 or self.test_size < 1 or self.n_scenarios < 1:
            raise ValueError("runs, test_size and n_scenarios must be positive")

    def solver(self) -> SolverOptions:
        return SolverOptions(self.backend, self.time_limit, command=self.solver_command)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


PRESETS = {
    "table2-row": BenchmarkConfig(problem="grid", axis="F_S", axis_values=(9, 1),
                                  methods=("OPT", "MICRO1", "META1", "MIP2", "LH2", "M2M2"),
                                  runs=20, grid_n=9, n_scenarios=10, time_limit=600.0),
    "table3": BenchmarkConfig(problem="network", axis="N", axis_values=(10,),
                              methods=("OPT", "MICRO1", "MICRO4", "LH4", "M2M4"), runs=5,
                              test_size=200, time_limit=120.0),
    "knapsack-default": BenchmarkConfig(problem="knapsack", axis="F_S", axis_values=(4,),
                                        runs=20, n_items=16, n_scenarios=10),
    "smoke": BenchmarkConfig(problem="knapsack", axis="F_S", axis_values=(2,),
                             methods=("OPT", "MICRO1", "META1", "MIP2", "LH2", "M2M2"),
                             runs=2, n_items=6, n_scenarios=4, test_size=10, time_limit=60.0),
}


# ---------------------------------------------------------------------------
# workloads


@dataclass
class Workload:
    problem: object
    train: ScenarioSet
    test: ScenarioSet
    feature_mask: list[int] | None = None


def make_workload(config: BenchmarkConfig, axis_value, run: int) -> Workload:
    """Instance, training and test scenarios of one run at one sweep point.

    The random stream depends on the seed and run only, so sweeping the
    number of categories or districts reuses the same items or edge costs.
    """
    rng = np.random.default_rng([config.seed, run])
    kw = {"n": config.n_items, "N": config.n_scenarios, "F_S": config.n_features,
          "grid": config.grid_n}
    kw[config.axis] = axis_value
    solver = config.solver()
    if config.problem == "knapsack":
        inst = gen_knapsack(int(kw["n"]), int(kw["F_S"]), rng)
        bases = base_costs(inst.n_items, rng)
        train = sample_costs(bases, int(kw["N"]), rng, config.delta)[0]
        test = sample_costs(bases, config.test_size, rng, config.delta)[0]
        return Workload(KnapsackProblem(inst, solver), ScenarioSet(train, train),
                        ScenarioSet(test, test))
    if config.problem == "grid":
        f_s = int(kw["F_S"])
        graph = gen_grid(int(kw["grid"]), f_s)
        bases = base_costs(graph.n_edges, rng)
        train = sample_costs(bases, int(kw["N"]), rng, config.delta)[0]
        test = sample_costs(bases, config.test_size, rng, config.delta)[0]
        problem = ShortestPathProblem(graph, grid_layers(f_s), solver, config.eval_time_limit)
        return Workload(problem, ScenarioSet(train, train), ScenarioSet(test, test))
    graph, traffic = gen_network(config.network_nodes, config.network_edges, int(kw["F_S"])
                                 if config.axis == "F_S" else 11, rng, config.network_noise)
    train = traffic.sample(int(kw["N"]), rng)
    test = traffic.sample(config.test_size, rng)
    problem = ShortestPathProblem(graph, None, solver, config.eval_time_limit)
    mask = [graph.n_edges, graph.n_edges + 1]
    return Workload(problem, train, test, mask)


# ---------------------------------------------------------------------------
# running


@dataclass
class MethodRecord:
    method: str
    k: int
    train_raw: float
    test_raw: float
    seconds: float
    status: str
    model_objective: float = math.nan
    train_values: np.ndarray | None = field(default=None, repr=False)


def _train(name: str, k: int, wl: Workload, solver: SolverOptions, cache: dict) -> TrainResult:
    depth = int(math.log2(k))
    p, train, mask = wl.problem, wl.train, wl.feature_mask
    if name == "META1":
        return best_single_meta(p, train, solver)
    if name == "MICRO1":
        return best_single_micro(p, train)
    if name == "MIP":
        return train_mip(p, train, depth, solver, feature_mask=mask)
    if name == "LH":
        return learn_heuristic(p, train, depth, solver=solver, feature_mask=mask)
    if ("MICRO", k) not in cache:
        cache[("MICRO", k)] = train_micro(p, train, depth, solver, feature_mask=mask)
    if name == "MICRO":
        return cache[("MICRO", k)]
    return m2m(p, train, depth, solver, micro=cache[("MICRO", k)])


def _audit(problem, result: TrainResult, train_values: np.ndarray, wl: Workload) -> str:
    """Compare an exact model's objective with the re-evaluated tree."""
    if math.isnan(result.objective) or result.status != "Optimal":
        return ""
    evaluated = aggregate("laplace", train_values, wl.train.probabilities)
    gap = evaluated - result.objective
    if problem.sense == MAX:
        gap = -gap
    tol = 1e-6 * max(1.0, abs(result.objective))
    return "" if gap <= tol else f";audit-mismatch({gap:.3g})"


def run_point(config: BenchmarkConfig, axis_value, run: int) -> list[MethodRecord]:
    """Train and evaluate every method for one run at one sweep point."""
    wl = make_workload(config, axis_value, run)
    solver = config.solver()
    p = wl.problem
    records = []
    cache: dict = {}
    for method in config.methods:
        name, k = parse_method(method)
        if name == "OPT":
            start = time.perf_counter()
            tr = p.nominal_values(wl.train.costs)
            te = p.nominal_values(wl.test.costs)
            records.append(MethodRecord(method, k, float(wl.train.probabilities @ tr),
                                        float(wl.test.probabilities @ te),
                                        time.perf_counter() - start, "Optimal", train_values=tr))
            continue
        try:
            res = _train(name, k, wl, solver, cache)
            tr = evaluate_tree(p, res.tree, wl.train)
            te = evaluate_tree(p, res.tree, wl.test)
            status = res.status + _audit(p, res, tr, wl)
            records.append(MethodRecord(method, k, float(wl.train.probabilities @ tr),
                                        float(wl.test.probabilities @ te), res.seconds, status,
                                        res.objective, tr))
        except Exception as exc:  # isolate per-method failures
            log.warning("run %s %s failed: %s", run, method, exc)
            records.append(MethodRecord(method, k, math.nan, math.nan, math.nan,
                                        f"Error: {type(exc).__name__}: {exc}"))
    return records


def _anchors(config: BenchmarkConfig, axis_value, run: int, records: list[MethodRecord]):
    by = {r.method: r for r in records}
    if "MICRO1" in by and "OPT" in by:
        return by["MICRO1"], by["OPT"]
    # anchors were not requested as rows; compute them quietly
    wl = make_workload(config, axis_value, run)
    p = wl.problem
    micro = best_single_micro(p, wl.train).tree
    m_tr = evaluate_tree(p, micro, wl.train)
    m_te = evaluate_tree(p, micro, wl.test)
    o_tr = p.nominal_values(wl.train.costs)
    o_te = p.nominal_values(wl.test.costs)
    pr, pt = wl.train.probabilities, wl.test.probabilities
    return (MethodRecord("MICRO1", 1, float(pr @ m_tr), float(pt @ m_te), 0.0, ""),
            MethodRecord("OPT", 1, float(pr @ o_tr), float(pt @ o_te), 0.0, ""))


def _scale(obj: float, lo: float, hi: float) -> float:
    if math.isnan(obj):
        return math.nan
    try:
        return scaled_objective(obj, lo, hi)
    except DegenerateScale:
        return math.nan


def run_id(config: BenchmarkConfig, axis_value, run: int) -> str:
    return f"{config.problem}-{config.axis}{axis_value}-r{run:03d}"


def _rows_for_run(config: BenchmarkConfig, run: int) -> list[dict]:
    rows = []
    for value in config.axis_values:
        records = run_point(config, value, run)
        micro1, opt = _anchors(config, value, run, records)
        for r in records:
            status = r.status
            scaled_tr = _scale(r.train_raw, micro1.train_raw, opt.train_raw)
            scaled_te = _scale(r.test_raw, micro1.test_raw, opt.test_raw)
            if any(math.isnan(s) and not math.isnan(raw)
                   for s, raw in ((scaled_tr, r.train_raw), (scaled_te, r.test_raw))):
                status += ";degenerate-anchors"
            rows.append({
                "run_id": run_id(config, value, run), "method": r.method, "K": r.k,
                "problem": config.problem, "axis_value": value,
                "obj_train_raw": r.train_raw, "obj_train_scaled": scaled_tr,
                "obj_test_raw": r.test_raw, "obj_test_scaled": scaled_te,
                "time_s": r.seconds, "status": status,
            })
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def read_report(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for key in ("obj_train_raw", "obj_train_scaled", "obj_test_raw", "obj_test_scaled",
                    "time_s"):
            r[key] = float(r[key])
        r["K"] = int(r["K"])
    return rows


def run_benchmark(config: BenchmarkConfig, out: str | Path | None = None, jobs: int = 1,
                  resume: bool = True) -> list[dict]:
    """Run all runs of ``config``; rows are appended to ``out`` run by run.

    With ``resume`` an existing ``out`` keeps its completed runs and only the
    missing ones are computed.  Rows come back in run order regardless of
    ``jobs``.
    """
    done: dict[int, list[dict]] = {}
    if out is not None and resume and Path(out).exists() and Path(out).stat().st_size:
        existing = read_report(out)
        expected = len(config.axis_values) * len(config.methods)
        for run in range(config.runs):
            ids = {run_id(config, v, run) for v in config.axis_values}
            rows = [r for r in existing if r["run_id"] in ids]
            if len(rows) == expected:
                done[run] = rows
    todo = [run for run in range(config.runs) if run not in done]
    if out is not None:
        with open(out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, CSV_FIELDS)
            writer.writeheader()
            for run in sorted(done):
                writer.writerows({k: _fmt(v) for k, v in r.items()} for r in done[run])
    results = dict(done)

    def emit(run: int, rows: list[dict]) -> None:
        results[run] = rows
        if out is not None:
            with open(out, "a", newline="") as fh:
                csv.DictWriter(fh, CSV_FIELDS).writerows({k: _fmt(v) for k, v in r.items()}
                                                         for r in rows)

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {run: pool.submit(_rows_for_run, config, run) for run in todo}
            for run in todo:
                emit(run, futures[run].result())
    else:
        for run in todo:
            emit(run, _rows_for_run(config, run))
    ordered = [r for run in sorted(results) for r in results[run]]
    if out is not None:
        # rewrite in run order so parallel and resumed executions give identical files
        write_report(out, ordered)
    return ordered


def write_report(path: str | Path | TextIO, rows: Iterable[dict]) -> None:
    """Write report rows as CSV to a path or an open text stream."""
    if hasattr(path, "write"):
        writer = csv.DictWriter(path, CSV_FIELDS)
        writer.writeheader()
        writer.writerows({k: _fmt(r[k]) for k in CSV_FIELDS} for r in rows)
        return
    with open(path, "w", newline="") as fh:
        write_report(fh, rows)


def plot_data(rows: Iterable[dict]) -> dict:
    """Group report rows by method and sweep value for external plotting."""
    out: dict = {}
    for r in rows:
        series = out.setdefault(r["method"], {})
        point = series.setdefault(str(r["axis_value"]), {"train": [], "test": [], "time": []})
        point["train"].append(r["obj_train_scaled"])
        point["test"].append(r["obj_test_scaled"])
        point["time"].append(r["time_s"])
    return out


def summarize(rows: Iterable[dict]) -> dict:
    """Mean scaled objectives and time per (axis value, method)."""
    acc: dict = {}
    for r in rows:
        key = (str(r["axis_value"]), r["method"])
        acc.setdefault(key, []).append(r)
    return {key: {"train": float(np.nanmean([r["obj_train_scaled"] for r in rs])),
                  "test": float(np.nanmean([r["obj_test_scaled"] for r in rs])),
                  "time": float(np.nanmean([r["time_s"] for r in rs])),
                  "runs": len(rs)}
            for key, rs in acc.items()}


__all__ = [
    "base_costs", "sample_costs", "gen_cost_scenarios", "gen_knapsack", "grid_layers", "gen_grid",
    "REGIMES", "traffic_regime", "TrafficModel", "gen_network", "save_network", "load_network",
    "BenchmarkConfig", "PRESETS", "parse_method", "Workload", "make_workload", "MethodRecord",
    "run_point", "run_id", "run_benchmark", "read_report", "write_report", "plot_data",
    "summarize", "CSV_FIELDS",
]
