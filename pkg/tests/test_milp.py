import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metasurrogate.milp import (MilpModel, ModelError, SolutionFormatError, SolverOptions, Status,
                                export_mps, read_solution, solve, solve_bnb)

from oracles import enumerate_binary_milp

BRIDGE = f"{sys.executable} -m metasurrogate.milp.highs_bridge {{mps}} {{sol}} {{timelimit}}"


def small_knapsack() -> MilpModel:
    m = MilpModel("ks", "max")
    x1, x2 = m.add_binary("x1"), m.add_binary("x2")
    m.add_constraint({x1: 2, x2: 2}, "<=", 3)
    m.set_objective({x1: 3, x2: 2})
    return m


def random_binary_model(rng: np.random.Generator, n: int) -> MilpModel:
    m = MilpModel("rand", str(rng.choice(["min", "max"])))
    xs = [m.add_binary(f"x{i}") for i in range(n)]
    for r in range(int(rng.integers(1, 5))):
        a = rng.integers(-4, 9, size=n)
        rel = str(rng.choice(["<=", ">=", "=="]))
        if rel == "<=":
            rhs = float(np.clip(a, 0, None).sum() * rng.uniform(0.2, 0.8))
        elif rel == ">=":
            rhs = float(np.clip(a, None, 0).sum() + rng.integers(0, 6))
        else:
            pick = rng.random(n) < 0.5
            rhs = float(a[pick].sum())    # feasible by construction
        m.add_constraint({x: float(v) for x, v in zip(xs, a)}, rel, rhs)
    m.set_objective({x: float(v) for x, v in zip(xs, rng.integers(-9, 10, size=n))})
    return m


def oracle(model: MilpModel):
    A = model.constraint_matrix().toarray()
    return enumerate_binary_milp(model.objective_vector(), A, model.relations, model.rhs,
                                 model.sense)


@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_single_binary_maximised(backend):
    m = MilpModel("one", "max")
    x = m.add_binary("x")
    m.set_objective({x: 1.0})
    sol = solve(m, SolverOptions(backend))
    assert sol.status is Status.OPTIMAL and sol[x] == 1 and sol.objective == 1


@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_two_item_knapsack(backend):
    sol = solve(small_knapsack(), SolverOptions(backend))
    assert sol.status is Status.OPTIMAL
    assert list(sol.values) == [1.0, 0.0] and sol.objective == 3


@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_infeasible_model(backend):
    m = MilpModel("inf")
    x = m.add_binary("x")
    m.add_constraint({x: 1.0}, "<=", -1.0)
    assert solve(m, SolverOptions(backend)).status is Status.INFEASIBLE


def test_unbounded_lp_detected():
    m = MilpModel("unb", "max")
    x = m.add_var("x", 0.0)
    m.set_objective({x: 1.0})
    assert solve_bnb(m).status is Status.UNBOUNDED


def test_mixed_integer_with_continuous_part():
    m = MilpModel("mix", "min")
    y = m.add_var("y", 0, 10, integer=True)
    z = m.add_var("z", 0, 10)
    m.add_constraint({y: 2, z: 1}, ">=", 5.5)
    m.set_objective({y: 3, z: 2})
    for backend in ("bnb", "highs"):
        sol = solve(m, SolverOptions(backend))
        # y=2, z=1.5 costs 9; y=3 costs 9 as well, y=1 needs z=3.5 (10)
        assert math.isclose(sol.objective, 9.0, abs_tol=1e-7)


def test_bad_constructs_rejected():
    m = MilpModel()
    with pytest.raises(ModelError):
        m.add_var("v", 2, 1)
    with pytest.raises(ModelError):
        m.add_constraint({5: 1.0}, "<=", 1)
    with pytest.raises(ModelError):
        m.add_constraint({}, "<>", 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 10))
def test_bnb_matches_enumeration_on_random_models(seed, n):
    model = random_binary_model(np.random.default_rng(seed), n)
    expected = oracle(model)
    sol = solve_bnb(model)
    if expected is None:
        assert sol.status is Status.INFEASIBLE
    else:
        assert sol.status is Status.OPTIMAL
        assert math.isclose(sol.objective, expected, abs_tol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bnb_bound_and_incumbent_history(seed):
    model = random_binary_model(np.random.default_rng(seed), 12)
    sol = solve_bnb(model)
    if not sol.status.has_solution:
        return
    sign = 1.0 if model.sense == "min" else -1.0
    # the bound is never beaten and incumbents strictly improve
    assert sign * sol.objective >= sign * sol.bound - 1e-6
    assert sign * sol.root_bound <= sign * sol.objective + 1e-6
    history = [sign * v for v in sol.incumbents]
    assert all(b < a for a, b in zip(history, history[1:]))
    assert model.max_violation(sol.values) <= 1e-6


def test_time_limited_search_reports_feasible():
    rng = np.random.default_rng(5)
    m = MilpModel("hard", "max")
    n = 40
    xs = [m.add_binary(f"x{i}") for i in range(n)]
    w = rng.integers(20, 60, size=n)
    m.add_constraint({x: float(v) for x, v in zip(xs, w)}, "<=", float(w.sum() // 2) + 0.5)
    m.set_objective({x: float(v + rng.integers(0, 3)) for x, v in zip(xs, w)})
    sol = solve_bnb(m, time_limit=0.3)
    assert sol.status in (Status.FEASIBLE, Status.OPTIMAL, Status.NO_SOLUTION)
    if sol.status is Status.FEASIBLE:
        assert sol.bound >= sol.objective - 1e-9


def test_mps_markers_and_binary_bounds():
    text = export_mps(small_knapsack())
    for marker in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert marker in text
    assert " BV BND x1" in text and " BV BND x2" in text
    assert "objective negated" in text


def test_mps_rejects_duplicate_names():
    m = MilpModel()
    m.add_binary("a")
    m.add_binary("a")
    with pytest.raises(ModelError):
        export_mps(m)


def test_read_solution_cases():
    m = small_knapsack()
    sol = read_solution(m, "x1 1\nx2 0\n")
    assert list(sol.values) == [1, 0] and sol.objective == 3
    empty = read_solution(m, "")
    assert list(empty.values) == [0, 0]
    with pytest.raises(SolutionFormatError):
        read_solution(m, "x1 1 2\n")
    with pytest.raises(SolutionFormatError):
        read_solution(m, "nope 1\n")


def test_external_bridge_reproduces_objective():
    pytest.importorskip("highspy")
    sol = solve(small_knapsack(), SolverOptions("external", command=BRIDGE))
    assert sol.status is Status.OPTIMAL and sol.objective == 3 and sol.bound == 3


def test_external_bridge_on_random_models_matches_bnb():
    pytest.importorskip("highspy")
    rng = np.random.default_rng(11)
    for _ in range(5):
        model = random_binary_model(rng, 8)
        ext = solve(model, SolverOptions("external", command=BRIDGE))
        ref = solve_bnb(model)
        assert ext.status.has_solution == ref.status.has_solution
        if ref.status.has_solution:
            assert math.isclose(ext.objective, ref.objective, abs_tol=1e-6)


def test_external_solver_failure_is_raised(tmp_path):
    from metasurrogate.milp import ExternalSolverError
    with pytest.raises(ExternalSolverError):
        solve(small_knapsack(), SolverOptions("external", command=f"{sys.executable} -c "
                                                            "'import sys; sys.exit(3)'"))


def test_external_backend_needs_a_command(monkeypatch):
    monkeypatch.delenv("METASURROGATE_SOLVER", raising=False)
    with pytest.raises(ValueError):
        SolverOptions("external")
