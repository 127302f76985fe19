"""Cost-minimizing baseline schedule and fixed-schedule survivability scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import MicrogridSpec, validate_spec
from .problem import BINARY, ProblemBuilder
from .scenarios import ScenarioSet
from .solve import INFEASIBLE, OPTIMAL, SolveBudget, solve, solve_lp

RECOURSE_MODES = ("none", "redispatch")
TOL = 1e-6


@dataclass(frozen=True)
class MemSchedule:
    commitment: np.ndarray  # (G, T) uint8
    startup: np.ndarray  # (G, T) uint8
    dispatch: np.ndarray  # (G, T) kW
    inverter_usage: np.ndarray  # (I, T) uint8
    total_cost: float

    @property
    def horizon(self) -> int:
        return self.inverter_usage.shape[1] if self.inverter_usage.size else self.dispatch.shape[1]


@dataclass(frozen=True)
class ScheduleEvaluation:
    sr: float
    scenario_success: np.ndarray  # (S,)
    interval_success: np.ndarray  # (S, T)
    net_power: np.ndarray  # (S, T)
    recourse: str


def schedule_cost(spec: MicrogridSpec, commitment: np.ndarray, dispatch: np.ndarray) -> float:
    """Operating cost of a commitment and dispatch, startups included."""
    dt = spec.interval_hours
    total = 0.0
    for g, gen in enumerate(spec.generators):
        prev = 1 if gen.initially_on else 0
        for t in range(spec.horizon):
            u = int(commitment[g, t])
            total += dt * (gen.op_cost_per_kwh * float(dispatch[g, t]) + gen.no_load_cost_per_h * u)
            if u and not prev:
                total += gen.startup_cost
            prev = u
    return total


def build_mem_schedule(spec: MicrogridSpec, solver: str = "auto", budget: SolveBudget | None = None,
                       solver_cmd: str | None = None) -> MemSchedule:
    """Deterministic unit commitment serving the full critical load with every inverter healthy.

    Renewable output is free, so every inverter with positive output is used.
    """
    validate_spec(spec)
    G, T = spec.n_generators, spec.horizon
    out = spec.inverter_output()  # (T, I)
    load = spec.critical_load()
    usage = (out.T > 0).astype(np.uint8)
    renewable = out.sum(axis=1)
    cap = renewable + sum(g.p_max_kw for g in spec.generators)
    short = np.flatnonzero(load > cap + TOL)
    if short.size:
        t = int(short[0])
        raise ModelError(f"critical load {load[t]:g} kW exceeds total capacity {cap[t]:g} kW at t={t}",
                         code="MEM_INFEASIBLE")

    dt = spec.interval_hours
    b = ProblemBuilder(name="mem", sense="min", index_letters={"uG": "gt", "su": "gt", "PG": "gt"})
    obj = []
    for g, gen in enumerate(spec.generators):
        ramp = gen.ramp_per_interval(dt)
        for t in range(T):
            u = b.add_var("uG", (g, t), kind=BINARY)
            su = b.add_var("su", (g, t), kind=BINARY)
            p = b.add_var("PG", (g, t))
            b.add_constraint([(p, 1.0), (u, -gen.p_min_kw)], ">=", 0.0, f"pmin_g{g}_t{t}")
            b.add_constraint([(p, 1.0), (u, -gen.p_max_kw)], "<=", 0.0, f"pmax_g{g}_t{t}")
            if t > 0:
                q = b.var("PG", g, t - 1)
                b.add_constraint([(p, 1.0), (q, -1.0)], "<=", ramp, f"rampup_g{g}_t{t}")
                b.add_constraint([(q, 1.0), (p, -1.0)], "<=", ramp, f"rampdn_g{g}_t{t}")
                b.add_constraint([(su, 1.0), (u, -1.0), (b.var("uG", g, t - 1), 1.0)], ">=", 0.0,
                                 f"start_g{g}_t{t}")
            else:
                b.add_constraint([(su, 1.0), (u, -1.0)], ">=", -1.0 if gen.initially_on else 0.0,
                                 f"start_g{g}_t{t}")
            obj += [(p, dt * gen.op_cost_per_kwh), (u, dt * gen.no_load_cost_per_h), (su, gen.startup_cost)]
    for t in range(T):
        need = float(load[t] - out[t, usage[:, t] > 0].sum())
        b.add_constraint([(b.var("PG", g, t), 1.0) for g in range(G)], ">=", need, f"balance_t{t}")
    b.set_objective(obj)
    problem = b.build()

    sol = solve(problem, solver, budget, command=solver_cmd)
    if sol.status == INFEASIBLE:
        raise ModelError("no commitment serves the critical load within ramp limits", code="MEM_INFEASIBLE")
    if sol.status != OPTIMAL:
        log_gap = f"gap {sol.bound_gap:.3g}" if np.isfinite(sol.bound_gap) else "no incumbent"
        raise ModelError(f"MEM solve stopped early ({log_gap})", code="SOLVER_BUDGET_EXCEEDED")

    def grab(family: str) -> np.ndarray:
        arr = np.zeros((G, T))
        for g in range(G):
            for t in range(T):
                arr[g, t] = sol.x[problem.var_id(family, g, t)]
        return arr

    commitment = np.round(grab("uG")).astype(np.uint8)
    dispatch = grab("PG") * commitment
    startup = np.zeros((G, T), dtype=np.uint8)
    for g, gen in enumerate(spec.generators):
        prev = np.concatenate([[1 if gen.initially_on else 0], commitment[g, :-1]])
        startup[g] = (commitment[g] > prev).astype(np.uint8)
    return MemSchedule(commitment, startup, dispatch, usage, schedule_cost(spec, commitment, dispatch))


def inverter_supply(flags: np.ndarray, usage: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Delivered inverter power (S, T) when ``usage`` (I, T) is followed under failure flags (S, T, I).

    A used, still-available, flagged inverter is lost from the next interval on.
    Planned use of a lost inverter delivers nothing.
    """
    S, T, I = flags.shape
    avail = np.ones((S, I), dtype=bool)
    supply = np.zeros((S, T))
    used = usage.T.astype(bool)  # (T, I)
    for t in range(T):
        active = avail & used[t]
        supply[:, t] = (active * out[t]).sum(axis=1)
        avail &= ~(active & flags[:, t, :].astype(bool))
    return supply


def _best_margin(spec: MicrogridSpec, commitment: np.ndarray, need: np.ndarray) -> float:
    """Largest achievable min_t (sum_g P_t - need_t) within the fixed commitment and ramps."""
    G, T = commitment.shape
    n = G * T + 1  # last column is the margin
    c = np.zeros(n)
    c[-1] = -1.0
    rows, rhs = [], []
    for t in range(T):
        r = np.zeros(n)
        r[[g * T + t for g in range(G)]] = -1.0
        r[-1] = 1.0
        rows.append(r)
        rhs.append(-need[t])
    for g, gen in enumerate(spec.generators):
        ramp = gen.ramp_per_interval(spec.interval_hours)
        for t in range(1, T):
            r = np.zeros(n)
            r[g * T + t], r[g * T + t - 1] = 1.0, -1.0
            rows += [r, -r]
            rhs += [ramp, ramp]
    lo = [gen.p_min_kw * commitment[g, t] for g, gen in enumerate(spec.generators) for t in range(T)]
    hi = [gen.p_max_kw * commitment[g, t] for g, gen in enumerate(spec.generators) for t in range(T)]
    bounds = list(zip(lo, hi)) + [(None, None)]
    res = solve_lp(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds)
    if res.status != OPTIMAL:
        return -np.inf
    return -res.objective


def evaluate_schedule_sr(spec: MicrogridSpec, schedule: MemSchedule, scenarios: ScenarioSet, alpha: float,
                         recourse: str = "none") -> ScheduleEvaluation:
    """Simulate ``schedule`` through every scenario and score its survivability rate."""
    if recourse not in RECOURSE_MODES:
        raise ValueError(f"recourse must be one of {RECOURSE_MODES}, got {recourse!r}")
    T, I = spec.horizon, spec.n_inverters
    if scenarios.horizon != T or scenarios.n_inverters != I:
        raise ModelError("scenario matrices do not match the microgrid", code="DIMENSION_MISMATCH")
    supply = inverter_supply(scenarios.flags, schedule.inverter_usage, spec.inverter_output())
    target = alpha * spec.critical_load()
    if recourse == "none":
        net = supply + schedule.dispatch.sum(axis=0)
        ok = net >= target - TOL
    else:
        ok = np.zeros(supply.shape, dtype=bool)
        net = np.zeros(supply.shape)
        cache: dict[bytes, tuple[float, np.ndarray]] = {}
        for w in range(len(scenarios)):
            key = supply[w].tobytes()
            if key not in cache:
                margin = _best_margin(spec, schedule.commitment, target - supply[w])
                cache[key] = (margin, np.full(T, margin >= -TOL))
            margin, good = cache[key]
            ok[w] = good
            # net power reported at the margin-maximizing dispatch level
            net[w] = target + margin if np.isfinite(margin) else supply[w]
    success = ok.all(axis=1) if T else np.ones(len(scenarios), dtype=bool)
    sr = math.fsum(float(w) for w, ok in zip(scenarios.weights, success) if ok)
    return ScheduleEvaluation(sr, success.astype(np.uint8), ok.astype(np.uint8), net, recourse)
