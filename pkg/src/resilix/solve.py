"""MILP solution backends.

``bundled``
    Exact best-bound branch-and-bound over the binary variables.  Node LP
    relaxations are solved from scratch with the HiGHS simplex.
``highs``
    The HiGHS MILP solver through :func:`scipy.optimize.milp`, for problems
    past desk scale.
``external``
    Any solver driven through LP-format files and a command template.
``auto``
    ``bundled`` up to :data:`AUTO_BUNDLED_MAX_BINARIES` binaries, else ``highs``.
"""

from __future__ import annotations

import heapq
import logging
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import highspy
import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .errors import InputError, SolverError
from .lpformat import parse_solution_text, write_lp_text
from .problem import MilpProblem, solution_violations

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
BUDGET_EXCEEDED = "budget_exceeded"

INT_TOL = 1e-6
FEAS_TOL = 1e-6
AUTO_BUNDLED_MAX_BINARIES = 400
DIVE_EVERY = 100
DIVE_EVERY_NO_INCUMBENT = 10
SOLVER_ENV = "RESILIX_SOLVER_CMD"
# dual simplex, no LP presolve: fastest cold node solves on ROP models
_LP_OPTIONS = {"output_flag": False, "presolve": "off", "simplex_strategy": 1, "threads": 1}
BACKENDS = ("auto", "bundled", "highs", "external")


@dataclass(frozen=True)
class SolveBudget:
    max_wall_seconds: float = 600.0
    max_nodes: int = 200_000
    relative_gap: float = 1e-9

    def __post_init__(self):
        if not (self.max_wall_seconds > 0 and self.max_nodes > 0 and self.relative_gap > 0):
            raise InputError("solve budget values must all be positive", code="RANGE_VIOLATION")


@dataclass
class MilpSolution:
    status: str
    objective_value: float
    x: np.ndarray
    bound_gap: float
    nodes: int = 0
    wall_seconds: float = 0.0
    backend: str = ""
    names: list[str] = field(default_factory=list, repr=False)

    @property
    def values(self) -> dict[int, float]:
        return {k: float(v) for k, v in enumerate(self.x)}

    def value_of(self, name: str) -> float:
        return float(self.x[self.names.index(name)])


@dataclass(frozen=True)
class LpResult:
    status: str
    objective: float
    x: np.ndarray | None


class LpRelaxation:
    """The LP relaxation of a problem in minimization form, re-solvable under new variable bounds.

    Each solve starts from scratch: the previous basis is discarded, so node
    results do not depend on the order nodes were visited in.
    """

    def __init__(self, problem: MilpProblem):
        self.problem = problem
        self.sign = -1.0 if problem.sense == "max" else 1.0
        self.c = self.sign * problem.objective_vector
        n = problem.n_vars
        self._cols = np.arange(n, dtype=np.int32)
        self._highs = highspy.Highs()
        for key, value in _LP_OPTIONS.items():
            self._highs.setOptionValue(key, value)
        if n == 0:
            return
        A, lo, hi = problem.matrix
        A = A.tocsc()
        lp = highspy.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = A.shape[0]
        lp.col_cost_ = self.c
        lb, ub = problem.bounds
        lp.col_lower_ = np.maximum(lb, -highspy.kHighsInf)
        lp.col_upper_ = np.minimum(ub, highspy.kHighsInf)
        lp.row_lower_ = np.where(np.isfinite(lo), lo, -highspy.kHighsInf)
        lp.row_upper_ = np.where(np.isfinite(hi), hi, highspy.kHighsInf)
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self._highs.passModel(lp)

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LpResult:
        """Minimization-form optimum under bounds ``lb <= x <= ub``."""
        n = self.problem.n_vars
        if n == 0:
            return LpResult(OPTIMAL, 0.0, np.zeros(0))
        if (lb > ub + 1e-12).any():
            return LpResult(INFEASIBLE, np.inf, None)
        h = self._highs
        h.changeColsBounds(n, self._cols, np.maximum(lb, -highspy.kHighsInf),
                           np.minimum(ub, highspy.kHighsInf))
        h.clearSolver()
        h.run()
        status = h.getModelStatus()
        if status == highspy.HighsModelStatus.kOptimal:
            x = np.asarray(h.getSolution().col_value, dtype=float)
            return LpResult(OPTIMAL, float(h.getInfo().objective_function_value), x)
        if status == highspy.HighsModelStatus.kInfeasible:
            return LpResult(INFEASIBLE, np.inf, None)
        if status in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
            return LpResult("unbounded", -np.inf, None)
        raise SolverError(f"LP relaxation failed: {h.modelStatusToString(status)}", code="LP_FAILURE")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> LpResult:
    """Plain LP ``min c x`` (shared by the oracle and MEM re-dispatch)."""
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    if res.status == 0:
        return LpResult(OPTIMAL, float(res.fun), np.asarray(res.x))
    if res.status == 2:
        return LpResult(INFEASIBLE, np.inf, None)
    if res.status == 3:
        return LpResult("unbounded", -np.inf, None)
    raise SolverError(f"LP failed: {res.message}", code="LP_FAILURE")


def _polish(relax: LpRelaxation, x: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray | None:
    """Round binaries, fix them and re-solve for the continuous part."""
    mask = relax.problem.integral_mask
    xb = np.round(x[mask])
    lb2, ub2 = lb.copy(), ub.copy()
    lb2[mask] = xb
    ub2[mask] = xb
    res = relax.solve(lb2, ub2)
    if res.status != OPTIMAL:
        return None
    out = res.x.copy()
    out[mask] = xb
    return out


def _dive(relax: LpRelaxation, x: np.ndarray, lb: np.ndarray, ub: np.ndarray,
          prio: np.ndarray, max_steps: int) -> np.ndarray | None:
    """Fractional diving heuristic.

    Integral-valued variables of any prioritized class are fixed first; then
    the least fractional variable of the highest class present is rounded and
    the LP re-solved (trying the other value once) until integral.
    """
    ids = np.flatnonzero(relax.problem.integral_mask)
    xi = x[ids]
    settled = (np.abs(xi - np.round(xi)) <= INT_TOL) & (prio > 0)
    if settled.any():
        lb_s, ub_s = lb.copy(), ub.copy()
        lb_s[ids[settled]] = ub_s[ids[settled]] = np.round(xi[settled])
        res = relax.solve(lb_s, ub_s)
        if res.status == OPTIMAL:
            found = _round_down_path(relax, ids, res.x, lb_s, ub_s, prio, max_steps)
            if found is not None:
                return found
    return _round_down_path(relax, ids, x, lb, ub, prio, max_steps)


def _round_down_path(relax, ids, x, lb, ub, prio, max_steps):
    # depth-first: on a dead end, undo fixings until one can take its other value
    trail: list[tuple[int, float, np.ndarray, np.ndarray]] = []
    lp_left = 4 * max_steps
    while lp_left > 0:
        xi = x[ids]
        frac = np.abs(xi - np.round(xi))
        open_ = frac > INT_TOL
        if not open_.any():
            return _polish(relax, x, lb, ub)
        top = prio[open_].max()
        score = np.where(open_ & (prio == top), frac, np.inf)
        j = ids[int(np.argmin(score))]
        near = np.round(x[j])
        far = np.floor(x[j]) if near > x[j] else np.ceil(x[j])
        if relax.c[j] != 0 and (far - near) * relax.c[j] < 0:
            near, far = far, near  # objective-carrying variables go the improving way first
        pending = [(j, val, lb, ub) for val in (near, far) if lb[j] <= val <= ub[j]]
        while pending and lp_left > 0:
            k, value, lb0, ub0 = pending.pop(0)
            lb_t, ub_t = lb0.copy(), ub0.copy()
            lb_t[k] = ub_t[k] = value
            lp_left -= 1
            res = relax.solve(lb_t, ub_t)
            if res.status == OPTIMAL:
                if pending:
                    trail.append(pending[0])
                lb, ub, x = lb_t, ub_t, res.x
                break
            if not pending and trail:
                pending.append(trail.pop())
        else:
            return None
    return None


def branch_priorities(problem: MilpProblem) -> np.ndarray:
    """Per-variable branching priority from ``meta["branch_priority"]`` (family -> int), default 0."""
    prio = np.zeros(problem.n_vars, dtype=int)
    table = problem.meta.get("branch_priority") or {}
    if table:
        for vid, (family, _) in problem.annotations.items():
            prio[vid] = table.get(family, 0)
    return prio


def _gap(bound: float, incumbent: float) -> float:
    return abs(bound - incumbent) / max(1.0, abs(incumbent))


def solve_bundled(problem: MilpProblem, budget: SolveBudget | None = None) -> MilpSolution:
    """Best-bound branch-and-bound over the integral variables.

    Open nodes are ordered by parent LP bound, ties broken by creation order.
    The branching variable is the most fractional one (ties: lowest id) within
    the highest class of ``problem.meta["branch_priority"]`` that still has a
    fractional member; without priorities this is plain most-fractional.
    """
    budget = budget or SolveBudget()
    start = time.perf_counter()
    relax = LpRelaxation(problem)
    lb0, ub0 = problem.bounds
    mask = problem.integral_mask
    bin_ids = np.flatnonzero(mask)
    names = [v.name for v in problem.variables]
    prio = branch_priorities(problem)[bin_ids]

    best_x: np.ndarray | None = None
    best_val = np.inf  # minimization form
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = [(-np.inf, 0, lb0.copy(), ub0.copy())]
    nodes = 0
    status = OPTIMAL
    global_bound = -np.inf

    while heap:
        if nodes >= budget.max_nodes or time.perf_counter() - start > budget.max_wall_seconds:
            status = BUDGET_EXCEEDED
            break
        parent_bound, _, lb, ub = heapq.heappop(heap)
        if best_x is not None and parent_bound >= best_val - budget.relative_gap * max(1.0, abs(best_val)):
            continue
        nodes += 1
        res = relax.solve(lb, ub)
        if res.status == "unbounded":
            raise SolverError("LP relaxation unbounded", code="UNBOUNDED")
        if res.status != OPTIMAL:
            continue
        if best_x is not None and res.objective >= best_val - budget.relative_gap * max(1.0, abs(best_val)):
            continue
        if (nodes - 1) % (DIVE_EVERY if best_x is not None else DIVE_EVERY_NO_INCUMBENT) == 0:
            cand = _dive(relax, res.x, lb, ub, prio, max_steps=int(bin_ids.size) + 1)
            if cand is not None and float(relax.c @ cand) < best_val:
                best_val, best_x = float(relax.c @ cand), cand
                if res.objective >= best_val - budget.relative_gap * max(1.0, abs(best_val)):
                    continue
        xb = res.x[bin_ids]
        frac = np.abs(xb - np.round(xb))
        if bin_ids.size == 0 or frac.max() <= INT_TOL:
            cand = _polish(relax, res.x, lb, ub)
            if cand is None:
                cand = res.x.copy()
                cand[bin_ids] = np.round(xb)
            val = float(relax.c @ cand)
            if val < best_val:
                best_val, best_x = val, cand
            continue
        # highest priority class first, then most fractional; argmax keeps the lowest id on ties
        dist = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        frac_mask = dist > INT_TOL
        top = prio[frac_mask].max()
        score = np.where(frac_mask & (prio == top), dist, -1.0)
        j = int(bin_ids[int(np.argmax(score))])
        xj = res.x[j]
        for side in ("down", "up"):
            lb_c, ub_c = lb.copy(), ub.copy()
            if side == "down":
                ub_c[j] = np.floor(xj)
            else:
                lb_c[j] = np.ceil(xj)
            counter += 1
            heapq.heappush(heap, (res.objective, counter, lb_c, ub_c))

    wall = time.perf_counter() - start
    if status == BUDGET_EXCEEDED:
        global_bound = min([h[0] for h in heap] + ([best_val] if best_x is not None else []))
    if best_x is None:
        if status == BUDGET_EXCEEDED:
            return MilpSolution(BUDGET_EXCEEDED, float("nan"), np.full(problem.n_vars, np.nan), np.inf,
                                nodes, wall, "bundled", names)
        return MilpSolution(INFEASIBLE, float("nan"), np.full(problem.n_vars, np.nan), np.inf,
                            nodes, wall, "bundled", names)
    gap = 0.0 if status == OPTIMAL else _gap(global_bound, best_val)
    return MilpSolution(status, relax.sign * best_val, best_x, gap, nodes, wall, "bundled", names)


def solve_highs(problem: MilpProblem, budget: SolveBudget | None = None) -> MilpSolution:
    budget = budget or SolveBudget()
    start = time.perf_counter()
    names = [v.name for v in problem.variables]
    relax = LpRelaxation(problem)
    lb, ub = problem.bounds
    cons = []
    if problem.constraints:
        A, lo, hi = problem.matrix
        cons.append(LinearConstraint(A, lo, hi))
    res = milp(
        relax.c, constraints=cons, integrality=problem.integral_mask.astype(int), bounds=Bounds(lb, ub),
        options={"time_limit": budget.max_wall_seconds, "mip_rel_gap": budget.relative_gap,
                 "node_limit": budget.max_nodes, "presolve": True},
    )
    wall = time.perf_counter() - start
    if res.status == 2:
        return MilpSolution(INFEASIBLE, float("nan"), np.full(problem.n_vars, np.nan), np.inf,
                            0, wall, "highs", names)
    if res.x is None:
        if res.status == 1:
            return MilpSolution(BUDGET_EXCEEDED, float("nan"), np.full(problem.n_vars, np.nan), np.inf,
                                0, wall, "highs", names)
        raise SolverError(f"HiGHS failed: {res.message}", code="SOLVER_FAILURE")
    x = _polish(relax, np.asarray(res.x), lb, ub)
    if x is None:
        x = np.asarray(res.x).copy()
        x[problem.integral_mask] = np.round(x[problem.integral_mask])
    status = OPTIMAL if res.status == 0 else BUDGET_EXCEEDED
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    return MilpSolution(status, relax.sign * float(relax.c @ x), x, gap, nodes, wall, "highs", names)


def solve_external(problem: MilpProblem, command: str | None = None,
                   budget: SolveBudget | None = None) -> MilpSolution:
    """Write LP text, run ``command`` and read back a ``name value`` solution file.

    ``command`` must contain ``{input}`` and ``{output}``; when omitted it is
    read from the ``RESILIX_SOLVER_CMD`` environment variable.
    """
    budget = budget or SolveBudget()
    command = command or os.environ.get(SOLVER_ENV)
    if not command:
        raise SolverError(f"no solver command given and {SOLVER_ENV} is unset", code="SOLVER_LAUNCH_FAILED")
    if "{input}" not in command or "{output}" not in command:
        raise InputError("solver command must contain {input} and {output}", code="BAD_SOLVER_COMMAND")
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="resilix-") as tmp:
        inp = Path(tmp) / "problem.lp"
        out = Path(tmp) / "solution.txt"
        inp.write_text(write_lp_text(problem))
        cmd = command.format(input=shlex.quote(str(inp)), output=shlex.quote(str(out)))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True,
                                  timeout=budget.max_wall_seconds)
        except subprocess.TimeoutExpired:
            raise SolverError(f"external solver exceeded {budget.max_wall_seconds}s",
                              code="SOLVER_LAUNCH_FAILED") from None
        if proc.returncode != 0:
            raise SolverError(f"external solver exited with {proc.returncode}: {proc.stderr.strip()[:500]}",
                              code="SOLVER_LAUNCH_FAILED")
        if not out.exists():
            raise SolverError("external solver wrote no solution file", code="SOLVER_LAUNCH_FAILED")
        x, reported = parse_solution_text(out.read_text(), problem)
    bad = solution_violations(problem, x, FEAS_TOL, INT_TOL)
    if bad:
        raise SolverError("external solution violates the problem: " + "; ".join(bad[:5]),
                          code="SOLUTION_INVALID")
    obj = problem.evaluate_objective(x)
    if reported is not None and abs(reported - obj) > 1e-6 * max(1.0, abs(obj)):
        log.warning("external solver reported objective %g, recomputed %g", reported, obj)
    return MilpSolution(OPTIMAL, obj, x, 0.0, 0, time.perf_counter() - start, "external",
                        [v.name for v in problem.variables])


def solve(problem: MilpProblem, backend: str = "auto", budget: SolveBudget | None = None,
          command: str | None = None) -> MilpSolution:
    if backend == "auto":
        backend = "bundled" if int(problem.integral_mask.sum()) <= AUTO_BUNDLED_MAX_BINARIES else "highs"
    if backend == "bundled":
        return solve_bundled(problem, budget)
    if backend == "highs":
        return solve_highs(problem, budget)
    if backend == "external":
        return solve_external(problem, command, budget)
    raise InputError(f"unknown solver backend {backend!r}; choose from {', '.join(BACKENDS)}",
                     code="UNKNOWN_BACKEND")
