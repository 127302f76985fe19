import itertools
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from resilix.errors import InputError, SolverError
from resilix.lpformat import format_solution_text
from resilix.oracle import brute_force_sr
from resilix.problem import BINARY, INTEGER, ProblemBuilder
from resilix.rop_model import build_rop_model
from resilix.solve import OPTIMAL, SolveBudget, solve, solve_bundled, solve_external, solve_highs


def test_integer_rounds_down():
    b = ProblemBuilder()
    x = b.add_var("x", (), 0, 3.7, kind=INTEGER)
    b.set_objective([(x, 1)])
    sol = solve_bundled(b.build())
    assert sol.status == OPTIMAL and sol.objective_value == 3 and sol.x[0] == 3


def test_integrality_cuts_fractional_optimum():
    b = ProblemBuilder()
    x = b.add_var("x", (), kind=BINARY)
    y = b.add_var("y", (), kind=BINARY)
    b.add_constraint([(x, 1), (y, 1)], "<=", 1.5)
    b.set_objective([(x, 1), (y, 1)])
    assert solve_bundled(b.build()).objective_value == 1


def test_infeasible():
    b = ProblemBuilder()
    x = b.add_var("x", (), kind=BINARY)
    b.add_constraint([(x, 1)], ">=", 2)
    assert solve_bundled(b.build()).status == "infeasible"


def test_minimize_sense():
    b = ProblemBuilder(sense="min")
    x = b.add_var("x", (), kind=BINARY)
    y = b.add_var("y", (), 0, 5)
    b.add_constraint([(x, 4), (y, 1)], ">=", 4.5)
    b.set_objective([(x, 3), (y, 1)])
    sol = solve_bundled(b.build())
    assert sol.objective_value == pytest.approx(3.5)


def test_rop_example_matches_oracle(oracle_example):
    spec, scen = oracle_example
    p = build_rop_model(spec, scen, 1.0)
    assert solve_bundled(p).objective_value == pytest.approx(brute_force_sr(spec, scen, 1.0).sr, abs=1e-12)
    assert solve_highs(p).objective_value == pytest.approx(0.9)


def test_node_budget():
    rng = np.random.default_rng(0)
    p = _knapsack(rng, 20)
    sol = solve_bundled(p, SolveBudget(max_nodes=3))
    assert sol.status == "budget_exceeded" and sol.nodes == 3


def test_unknown_backend():
    with pytest.raises(InputError):
        solve(_knapsack(np.random.default_rng(1), 3), backend="nope")


def _knapsack(rng, n):
    b = ProblemBuilder()
    ids = [b.add_var("x", (k,), kind=BINARY) for k in range(n)]
    w = rng.integers(1, 20, n)
    b.add_constraint([(i, float(c)) for i, c in zip(ids, w)], "<=", float(w.sum() // 2) + 0.5)
    b.set_objective([(i, float(v)) for i, v in zip(ids, rng.integers(1, 30, n))])
    return b.build()


def enumerate_optimum(problem) -> float:
    """Best objective over all binary assignments, LP for the continuous part."""
    mask = problem.binary_mask
    A, lo, hi = problem.matrix
    A = A.toarray()
    lb, ub = problem.bounds
    c = problem.objective_vector * (-1 if problem.sense == "max" else 1)
    best = np.inf
    for bits in itertools.product((0.0, 1.0), repeat=int(mask.sum())):
        l2, u2 = lb.copy(), ub.copy()
        l2[mask] = u2[mask] = bits
        rows = [A, -A]
        rhs = [np.where(np.isfinite(hi), hi, 1e30), np.where(np.isfinite(lo), -lo, 1e30)]
        res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                      bounds=list(zip(l2, np.where(np.isfinite(u2), u2, None))), method="highs")
        if res.status == 0:
            best = min(best, res.fun)
    return -best if problem.sense == "max" else best


@st.composite
def random_milp(draw):
    n_bin = draw(st.integers(1, 8))
    n_cont = draw(st.integers(0, 3))
    b = ProblemBuilder(sense=draw(st.sampled_from(["max", "min"])))
    ids = [b.add_var("x", (k,), kind=BINARY) for k in range(n_bin)]
    ids += [b.add_var("y", (k,), 0, draw(st.integers(1, 5))) for k in range(n_cont)]
    coef = st.integers(-5, 5)
    for k in range(draw(st.integers(1, 4))):
        terms = [(i, draw(coef)) for i in ids]
        b.add_constraint(terms, draw(st.sampled_from(["<=", ">="])), draw(st.integers(-4, 6)) + 0.5)
    b.set_objective([(i, draw(coef)) for i in ids])
    return b.build()


@settings(max_examples=60, deadline=None)
@given(random_milp())
def test_matches_enumeration(problem):
    expected = enumerate_optimum(problem)
    sol = solve_bundled(problem)
    if not np.isfinite(expected):
        assert sol.status == "infeasible"
    else:
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(expected, abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(random_milp())
def test_deterministic(problem):
    a, b = solve_bundled(problem), solve_bundled(problem)
    assert a.status == b.status and a.nodes == b.nodes
    assert np.array_equal(a.x, b.x, equal_nan=True)


def test_larger_enumeration_case():
    p = _knapsack(np.random.default_rng(7), 12)
    assert solve_bundled(p).objective_value == pytest.approx(enumerate_optimum(p))


# external bridge --------------------------------------------------------------

def _copy_cmd(src):
    return f"cp {src} {{output}} && test -s {{input}}"


def test_external_mock_copy(tmp_path, oracle_example):
    spec, scen = oracle_example
    p = build_rop_model(spec, scen, 1.0)
    ref = solve_bundled(p)
    src = tmp_path / "prepared.sol"
    src.write_text(format_solution_text(p, ref.x, ref.objective_value))
    sol = solve_external(p, _copy_cmd(src))
    assert sol.status == OPTIMAL and sol.objective_value == pytest.approx(ref.objective_value)


def test_external_fractional_binary_rejected(tmp_path):
    b = ProblemBuilder()
    x = b.add_var("x", (), kind=BINARY)
    b.set_objective([(x, 1)])
    src = tmp_path / "bad.sol"
    src.write_text("x 0.5\n")
    with pytest.raises(SolverError) as err:
        solve_external(b.build(), _copy_cmd(src))
    assert err.value.code == "SOLUTION_INVALID"


def test_external_launch_failure():
    with pytest.raises(SolverError) as err:
        solve_external(_knapsack(np.random.default_rng(0), 2), "false {input} {output}")
    assert err.value.code == "SOLVER_LAUNCH_FAILED"


def test_external_needs_placeholders():
    with pytest.raises(InputError):
        solve_external(_knapsack(np.random.default_rng(0), 2), "true")


def test_external_from_environment(monkeypatch, oracle_example):
    spec, scen = oracle_example
    p = build_rop_model(spec, scen, 1.0)
    monkeypatch.setenv("RESILIX_SOLVER_CMD", f"{sys.executable} -m resilix.lp_shim {{input}} {{output}}")
    assert solve(p, backend="external").objective_value == pytest.approx(0.9, abs=1e-6)


@pytest.mark.parametrize("engine", ["highspy", "resilix"])
def test_lp_shim_matches_bundled(engine, oracle_example):
    spec, scen = oracle_example
    p = build_rop_model(spec, scen, 1.0)
    cmd = f"{sys.executable} -m resilix.lp_shim {{input}} {{output}} --engine {engine}"
    assert solve_external(p, cmd).objective_value == pytest.approx(solve_bundled(p).objective_value, abs=1e-6)
