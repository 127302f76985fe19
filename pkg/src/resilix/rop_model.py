"""The survivability-maximizing stochastic MILP and its solution mapping.

Variable families (indices in brackets, all 0-based):

    uG[g,t]     generator commitment, shared by every scenario
    PG[g,t,w]   generator output per scenario
    v[i,t,w]    inverter in use
    uI[i,t,w]   inverter still available
    wI[i,t,w]   confirmed failure: used while flagged
    PNET[t,w]   aggregated supply
    Y[t,w]      surplus over the required level when the interval succeeds
    XT[t,w]     interval success
    X[w]        scenario success (every interval succeeded)

The objective maximizes the probability-weighted count of successful
scenarios, i.e. the survivability rate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import MicrogridSpec
from .problem import BINARY, MilpProblem, ProblemBuilder, solution_violations
from .scenarios import ScenarioSet
from .solve import MilpSolution

log = logging.getLogger(__name__)

INDEX_LETTERS = {
    "uG": "gt", "PG": "gtw", "v": "itw", "uI": "itw", "wI": "itw",
    "PNET": "tw", "Y": "tw", "XT": "tw", "X": "w",
    "su": "gt", "P": "gt",
}
BINARY_FAMILIES = ("uG", "v", "uI", "wI", "XT", "X")
CONTINUOUS_FAMILIES = ("PG", "PNET", "Y")
TOL = 1e-6
# first-stage commitment, then success indicators, then confirmed failures
BRANCH_PRIORITY = {"uG": 4, "X": 3, "XT": 2, "wI": 1}


def compute_big_m(spec: MicrogridSpec, alpha: float) -> float:
    """Constant large enough to make the interval-success constraints exact indicators."""
    if alpha < 0:
        raise ModelError("alpha must be non-negative", code="RANGE_VIOLATION")
    gen = sum(g.p_max_kw for g in spec.generators)
    inv = sum(max(i.output_kw) if i.output_kw else 0.0 for i in spec.inverters)
    load = max(spec.load.critical_kw) if spec.load.critical_kw else 0.0
    m = gen + inv + alpha * load
    if m == 0:
        log.warning("big-M is zero: the microgrid has no capacity and no load")
    return float(m)


def _check_dims(spec: MicrogridSpec, scenarios: ScenarioSet) -> None:
    if scenarios.horizon != spec.horizon or scenarios.n_inverters != spec.n_inverters:
        raise ModelError(
            f"scenario matrices are {scenarios.horizon}x{scenarios.n_inverters}, "
            f"microgrid is T={spec.horizon}, I={spec.n_inverters}",
            code="DIMENSION_MISMATCH",
        )


def build_rop_model(spec: MicrogridSpec, scenarios: ScenarioSet, alpha: float) -> MilpProblem:
    _check_dims(spec, scenarios)
    G, T, I, S = spec.n_generators, spec.horizon, spec.n_inverters, len(scenarios)
    out = spec.inverter_output()
    load = spec.critical_load()
    big_m = compute_big_m(spec, alpha)
    b = ProblemBuilder(name="rop", sense="max", index_letters=INDEX_LETTERS)
    b.meta.update(G=G, T=T, I=I, S=S, alpha=float(alpha), big_m=big_m, kind="rop",
                  branch_priority=BRANCH_PRIORITY)

    for g in range(G):
        for t in range(T):
            b.add_var("uG", (g, t), kind=BINARY)
    for w in range(S):
        for g, gen in enumerate(spec.generators):
            for t in range(T):
                b.add_var("PG", (g, t, w), 0.0, gen.p_max_kw)
        for i in range(I):
            for t in range(T):
                b.add_var("v", (i, t, w), kind=BINARY)
                b.add_var("uI", (i, t, w), 1.0 if t == 0 else 0.0, 1.0, kind=BINARY)
                b.add_var("wI", (i, t, w), kind=BINARY)
        for t in range(T):
            b.add_var("PNET", (t, w), 0.0)
            b.add_var("Y", (t, w), 0.0)
            b.add_var("XT", (t, w), kind=BINARY)
        b.add_var("X", (w,), kind=BINARY)

    var = b.var
    for w in range(S):
        f = scenarios.flags[w]
        for g, gen in enumerate(spec.generators):
            ramp = gen.ramp_per_interval(spec.interval_hours)
            for t in range(T):
                p, u = var("PG", g, t, w), var("uG", g, t)
                b.add_constraint([(p, 1), (u, -gen.p_min_kw)], ">=", 0, f"pmin_g{g}_t{t}_w{w}")
                b.add_constraint([(p, 1), (u, -gen.p_max_kw)], "<=", 0, f"pmax_g{g}_t{t}_w{w}")
                if t > 0:
                    prev = var("PG", g, t - 1, w)
                    b.add_constraint([(p, 1), (prev, -1)], "<=", ramp, f"rampup_g{g}_t{t}_w{w}")
                    b.add_constraint([(p, 1), (prev, -1)], ">=", -ramp, f"rampdn_g{g}_t{t}_w{w}")
        for i in range(I):
            for t in range(T):
                v, ua, wf = var("v", i, t, w), var("uI", i, t, w), var("wI", i, t, w)
                fl = float(f[t, i])
                b.add_constraint([(v, 1), (ua, -1)], "<=", 0, f"use_i{i}_t{t}_w{w}")
                if t > 0:
                    b.add_constraint([(ua, 1), (var("uI", i, t - 1, w), -1)], "<=", 0, f"avail_i{i}_t{t}_w{w}")
                b.add_constraint([(wf, 1), (v, -1)], ">=", fl - 1, f"failand_i{i}_t{t}_w{w}")
                b.add_constraint([(wf, 1), (v, -1)], "<=", 0, f"failv_i{i}_t{t}_w{w}")
                b.add_constraint([(wf, 1)], "<=", fl, f"failf_i{i}_t{t}_w{w}")
                if t < T - 1:
                    b.add_constraint([(var("uI", i, t + 1, w), 1), (wf, 1)], "<=", 1, f"lost_i{i}_t{t}_w{w}")
        for t in range(T):
            pnet, y, xt = var("PNET", t, w), var("Y", t, w), var("XT", t, w)
            need = float(alpha * load[t])
            terms = [(var("PG", g, t, w), 1.0) for g in range(G)]
            terms += [(var("v", i, t, w), float(out[t, i])) for i in range(I)]
            b.add_constraint(terms + [(pnet, -1.0)], "=", 0, f"net_t{t}_w{w}")
            b.add_constraint([(y, 1), (pnet, -1), (xt, big_m)], "<=", big_m - need, f"bigm_t{t}_w{w}")
            b.add_constraint([(y, 1), (pnet, -1)], ">=", -need, f"surplus_t{t}_w{w}")
            b.add_constraint([(y, 1), (xt, -big_m)], "<=", 0, f"ycap_t{t}_w{w}")
        x = var("X", w)
        for t in range(T):
            b.add_constraint([(x, 1), (var("XT", t, w), -1)], "<=", 0, f"xmin_t{t}_w{w}")
        b.add_constraint([(var("XT", t, w), 1) for t in range(T)] + [(x, -1)], "<=", T - 1, f"xall_w{w}")

    b.set_objective((var("X", w), float(scenarios.weights[w])) for w in range(S))
    return b.build()


def expected_counts(G: int, T: int, I: int, S: int) -> dict[str, int]:
    """Variable counts per family for the given dimensions."""
    return {
        "uG": G * T, "PG": G * T * S, "v": I * T * S, "uI": I * T * S, "wI": I * T * S,
        "PNET": T * S, "Y": T * S, "XT": T * S, "X": S,
    }


@dataclass(frozen=True)
class RopPlan:
    """Solved survivability plan; per-scenario arrays are indexed scenario-first.

    Shapes: ``commitment`` (G, T); ``dispatch`` (S, G, T); ``usage``,
    ``availability`` and ``confirmed_failure`` (S, I, T); ``net_power`` and
    ``interval_success`` (S, T); ``scenario_success`` and ``weights`` (S,).
    """

    sr: float
    objective: float
    commitment: np.ndarray
    dispatch: np.ndarray
    usage: np.ndarray
    availability: np.ndarray
    confirmed_failure: np.ndarray
    interval_success: np.ndarray
    scenario_success: np.ndarray
    net_power: np.ndarray
    surplus: np.ndarray
    weights: np.ndarray
    alpha: float
    status: str = "optimal"


def _gather(problem: MilpProblem, x: np.ndarray, family: str, shape: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(shape)
    for idx in np.ndindex(*shape):
        out[idx] = x[problem.index[(family, idx)]]
    return out


def extract_plan(problem: MilpProblem, solution: MilpSolution, scenarios: ScenarioSet) -> RopPlan:
    """Map solver values back to arrays and cross-check the objective."""
    x = np.asarray(solution.x, dtype=float)
    bad = solution_violations(problem, x, TOL, TOL)
    if bad:
        raise ModelError("solution violates the model: " + "; ".join(bad[:5]), code="INFEASIBLE_SOLUTION")
    G, T, I, S = (int(problem.meta[k]) for k in ("G", "T", "I", "S"))
    if S != len(scenarios):
        raise ModelError("scenario set does not match the model", code="DIMENSION_MISMATCH")
    xr = x.copy()
    xr[problem.integral_mask] = np.round(xr[problem.integral_mask])
    u = _gather(problem, xr, "uG", (G, T)).astype(np.uint8)

    def per_w(family: str, a: int) -> np.ndarray:
        arr = np.zeros((S, a, T))
        for w in range(S):
            for j in range(a):
                for t in range(T):
                    arr[w, j, t] = xr[problem.index[(family, (j, t, w))]]
        return arr

    def per_tw(family: str) -> np.ndarray:
        arr = np.zeros((S, T))
        for w in range(S):
            for t in range(T):
                arr[w, t] = xr[problem.index[(family, (t, w))]]
        return arr

    succ = np.array([xr[problem.index[("X", (w,))]] for w in range(S)]).astype(np.uint8)
    sr = math.fsum(float(w) for w, ok in zip(scenarios.weights, succ) if ok)
    obj = float(solution.objective_value)
    if problem.meta.get("kind") == "rop" and abs(sr - obj) > 1e-6:
        raise ModelError(f"survivability {sr} disagrees with objective {obj}", code="OBJECTIVE_MISMATCH")
    return RopPlan(
        sr=sr, objective=obj, commitment=u,
        dispatch=per_w("PG", G), usage=per_w("v", I).astype(np.uint8),
        availability=per_w("uI", I).astype(np.uint8), confirmed_failure=per_w("wI", I).astype(np.uint8),
        interval_success=per_tw("XT").astype(np.uint8), scenario_success=succ,
        net_power=per_tw("PNET"), surplus=per_tw("Y"), weights=np.asarray(scenarios.weights).copy(),
        alpha=float(problem.meta["alpha"]), status=solution.status,
    )


def validate_plan(spec: MicrogridSpec, scenarios: ScenarioSet, plan: RopPlan, tol: float = TOL) -> list[str]:
    """Check every constraint family's semantics directly on the plan arrays.

    Returns human-readable violations; an empty list means the plan is valid.
    """
    errs: list[str] = []
    T, I, S = spec.horizon, spec.n_inverters, len(scenarios)
    out = spec.inverter_output()
    need = plan.alpha * spec.critical_load()
    u = plan.commitment
    for g, gen in enumerate(spec.generators):
        ramp = gen.ramp_per_interval(spec.interval_hours)
        p = plan.dispatch[:, g, :]
        if (p < gen.p_min_kw * u[g] - tol).any() or (p > gen.p_max_kw * u[g] + tol).any():
            errs.append(f"output limits violated for {gen.name}")
        if T > 1 and (np.abs(np.diff(p, axis=1)) > ramp + tol).any():
            errs.append(f"ramp limit violated for {gen.name}")
    v, ua, wf = plan.usage, plan.availability, plan.confirmed_failure
    f = np.transpose(scenarios.flags, (0, 2, 1))  # (S, I, T)
    if (v > ua).any():
        errs.append("an unavailable inverter is used")
    if I and (ua[:, :, 0] != 1).any():
        errs.append("inverters must start available")
    if T > 1 and (np.diff(ua.astype(int), axis=2) > 0).any():
        errs.append("availability increases over time")
    if (wf != (v & f)).any():
        errs.append("confirmed failure differs from (used AND flagged)")
    if T > 1 and ((wf[:, :, :-1] == 1) & (ua[:, :, 1:] == 1)).any():
        errs.append("failed inverter available in the next interval")
    net = plan.dispatch.sum(axis=1) + np.einsum("sit,ti->st", v.astype(float), out)
    if (np.abs(net - plan.net_power) > tol * np.maximum(1.0, np.abs(net))).any():
        errs.append("net power differs from dispatch plus used inverter output")
    xt = plan.interval_success
    if ((xt == 1) & (plan.net_power < need - tol)).any():
        errs.append("interval marked successful below the required level")
    if ((xt == 0) & (plan.net_power > need + tol)).any():
        errs.append("interval marked failed above the required level")
    if S and (plan.scenario_success != xt.min(axis=1)).any():
        errs.append("scenario success differs from min over intervals")
    if abs(float(np.dot(plan.weights, plan.scenario_success)) - plan.sr) > 1e-6:
        errs.append("sr differs from weighted scenario success")
    return errs


def build_cost_model(spec: MicrogridSpec, scenarios: ScenarioSet, alpha: float, plan: RopPlan) -> MilpProblem:
    """Second phase: keep the success pattern of ``plan`` and minimize expected operating cost.

    Every X and XT variable is fixed to its value in ``plan``; startup
    indicators ``su[g,t]`` are added for the first-stage commitment.
    """
    base = build_rop_model(spec, scenarios, alpha)
    b = ProblemBuilder(name="rop_cost", sense="min", index_letters=INDEX_LETTERS)
    b.meta.update(base.meta)
    b.meta["kind"] = "rop_cost"
    for vid, v in enumerate(base.variables):
        fam, idx = base.annotations[vid]
        lb, ub = v.lb, v.ub
        if fam == "XT":
            lb = ub = float(plan.interval_success[idx[1], idx[0]])
        elif fam == "X":
            lb = ub = float(plan.scenario_success[idx[0]])
        b.add_var(fam, idx, lb, ub, v.kind)
    for con in base.constraints:
        b.add_constraint(con.terms, con.sense, con.rhs, con.name)
    dt = spec.interval_hours
    obj: list[tuple[int, float]] = []
    for g, gen in enumerate(spec.generators):
        for t in range(spec.horizon):
            su = b.add_var("su", (g, t), kind=BINARY)
            u = b.var("uG", g, t)
            prev = [(b.var("uG", g, t - 1), 1.0)] if t > 0 else []
            rhs = -1.0 if (t == 0 and gen.initially_on) else 0.0
            b.add_constraint([(su, 1.0), (u, -1.0)] + prev, ">=", rhs, f"start_g{g}_t{t}")
            obj.append((su, gen.startup_cost))
            obj.append((u, dt * gen.no_load_cost_per_h))
            for w in range(len(scenarios)):
                obj.append((b.var("PG", g, t, w), dt * gen.op_cost_per_kwh * float(scenarios.weights[w])))
    b.set_objective(obj)
    return b.build()
