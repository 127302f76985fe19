"""Exhaustive survivability oracle for tiny instances.

Enumerates every commitment and, per scenario, every inverter usage matrix
consistent with availability propagation.  Dispatch feasibility for a usage
matrix is a small LP over generator outputs.  Used to certify the MILP
builder and the solvers; it does not share any code with the model builder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import MicrogridSpec
from .scenarios import ScenarioSet
from .solve import OPTIMAL, solve_lp

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class OracleLimits:
    max_commitment_bits: int = 12
    max_usage_bits: int = 12
    max_scenarios: int = 64


@dataclass(frozen=True)
class OracleResult:
    sr: float
    best_commitment: np.ndarray
    per_scenario_policies: list[np.ndarray | None]
    per_scenario_success: np.ndarray
    commitments_checked: int = 0
    lp_calls: int = 0


def _usage_options(flags: np.ndarray, out: np.ndarray) -> dict[tuple[float, ...], np.ndarray]:
    """Inverter supply vector -> one usage matrix (I, T) reaching it."""
    T, I = flags.shape
    found: dict[tuple[float, ...], np.ndarray] = {}
    subsets = list(itertools.product((0, 1), repeat=I))

    def walk(t: int, avail: np.ndarray, usage: np.ndarray, supply: list[float]) -> None:
        if t == T:
            key = tuple(supply)
            if key not in found:
                found[key] = usage.copy()
            return
        for sub in subsets:
            used = np.array(sub, dtype=bool)
            if (used & ~avail).any():
                continue  # using an unavailable inverter is not allowed
            usage[:, t] = used
            lost = used & flags[t].astype(bool)
            walk(t + 1, avail & ~lost, usage, supply + [float(out[t, used].sum())])
        usage[:, t] = 0

    walk(0, np.ones(I, dtype=bool), np.zeros((I, T), dtype=np.uint8), [])
    return found


def _pareto(options: dict[tuple[float, ...], np.ndarray]) -> list[tuple[tuple[float, ...], np.ndarray]]:
    keys = sorted(options, reverse=True)
    keep = []
    for k in keys:
        arr = np.array(k)
        if any((np.array(o) >= arr).all() for o, _ in keep):
            continue
        keep.append((k, options[k]))
    return keep


class _DispatchChecker:
    """Is there a generator dispatch under commitment ``u`` covering ``need`` at every interval?"""

    def __init__(self, spec: MicrogridSpec):
        self.spec = spec
        self.pmin = np.array([g.p_min_kw for g in spec.generators])
        self.pmax = np.array([g.p_max_kw for g in spec.generators])
        self.ramp = np.array([g.ramp_per_interval(spec.interval_hours) for g in spec.generators])
        self.lp_calls = 0
        self._cache: dict[tuple, bool] = {}

    def feasible(self, u: np.ndarray, need: np.ndarray) -> bool:
        key = (u.tobytes(), tuple(np.round(need, 12)))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = self._solve(u, need)
        return hit

    def _solve(self, u: np.ndarray, need: np.ndarray) -> bool:
        G, T = u.shape
        lo = self.pmin[:, None] * u
        hi = self.pmax[:, None] * u
        if (need > hi.sum(axis=0) + FEAS_TOL).any():
            return False
        if G == 0:
            return True
        if T == 1 or (np.abs(np.diff(hi, axis=1)) <= self.ramp[:, None] + FEAS_TOL).all():
            return True  # full output is itself a valid dispatch
        n = G * T
        rows, rhs = [], []
        for t in range(T):
            r = np.zeros(n)
            r[[g * T + t for g in range(G)]] = -1.0
            rows.append(r)
            rhs.append(-need[t])
        for g in range(G):
            for t in range(1, T):
                r = np.zeros(n)
                r[g * T + t], r[g * T + t - 1] = 1.0, -1.0
                rows += [r, -r]
                rhs += [self.ramp[g], self.ramp[g]]
        bounds = np.column_stack([lo.ravel(), hi.ravel()])
        self.lp_calls += 1
        res = solve_lp(np.zeros(n), A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds)
        return res.status == OPTIMAL


def brute_force_sr(spec: MicrogridSpec, scenarios: ScenarioSet, alpha: float,
                   limits: OracleLimits = OracleLimits()) -> OracleResult:
    G, T, I, S = spec.n_generators, spec.horizon, spec.n_inverters, len(scenarios)
    if G * T > limits.max_commitment_bits or I * T > limits.max_usage_bits or S > limits.max_scenarios:
        raise ModelError(
            f"instance too large for enumeration (G*T={G * T}, I*T={I * T}, scenarios={S})",
            code="SIZE_LIMIT_EXCEEDED",
        )
    if scenarios.horizon != T or scenarios.n_inverters != I:
        raise ModelError("scenario matrices do not match the microgrid", code="DIMENSION_MISMATCH")
    out = spec.inverter_output()
    need_total = alpha * spec.critical_load()
    options = [_pareto(_usage_options(scenarios.flags[w], out)) for w in range(S)]
    checker = _DispatchChecker(spec)

    best = (-1.0, None, None, None)
    n_checked = 0
    for bits in itertools.product((0, 1), repeat=G * T):
        u = np.array(bits, dtype=np.uint8).reshape(G, T)
        n_checked += 1
        success = np.zeros(S, dtype=np.uint8)
        policies: list[np.ndarray | None] = [None] * S
        for w in range(S):
            for supply, usage in options[w]:
                need = np.maximum(0.0, need_total - np.array(supply))
                if checker.feasible(u, need):
                    success[w] = 1
                    policies[w] = usage
                    break
        sr = float(np.dot(scenarios.weights, success))
        if sr > best[0]:
            best = (sr, u, policies, success)
    sr, u, policies, success = best
    return OracleResult(sr, u, policies, success, n_checked, checker.lp_calls)
