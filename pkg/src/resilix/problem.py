"""Solver-independent mixed-integer linear programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"
SENSES = ("<=", "=", ">=")

# index letters used to derive variable names from (family, indices)
DEFAULT_INDEX_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    kind: str = CONTINUOUS


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str


@dataclass(frozen=True)
class MilpProblem:
    """Variables, linear constraints and a linear objective.

    ``annotations`` maps a variable id to its (family, indices) pair; ``meta``
    carries builder context such as dimensions.
    """

    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[int, float], ...]
    sense: str = "max"
    annotations: Mapping[int, tuple[str, tuple[int, ...]]] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict)
    name: str = "resilix"

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @cached_property
    def index(self) -> dict[tuple[str, tuple[int, ...]], int]:
        return {key: vid for vid, key in self.annotations.items()}

    def var_id(self, family: str, *indices: int) -> int:
        return self.index[(family, tuple(indices))]

    @cached_property
    def name_to_id(self) -> dict[str, int]:
        return {v.name: k for k, v in enumerate(self.variables)}

    @cached_property
    def binary_mask(self) -> np.ndarray:
        return np.array([v.kind == BINARY for v in self.variables], dtype=bool)

    @cached_property
    def integral_mask(self) -> np.ndarray:
        """Binary or general-integer variables."""
        return np.array([v.kind in (BINARY, INTEGER) for v in self.variables], dtype=bool)

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    @cached_property
    def objective_vector(self) -> np.ndarray:
        """Objective coefficients in the problem's own sense."""
        c = np.zeros(self.n_vars)
        for vid, coef in self.objective:
            c[vid] += coef
        return c

    @cached_property
    def matrix(self) -> tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """(A, row_lower, row_upper) with ``row_lower <= A x <= row_upper``."""
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for vid, coef in con.terms:
                rows.append(r)
                cols.append(vid)
                vals.append(coef)
            lo[r] = con.rhs if con.sense in (">=", "=") else -np.inf
            hi[r] = con.rhs if con.sense in ("<=", "=") else np.inf
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), self.n_vars))
        return A, lo, hi

    def evaluate_objective(self, x: np.ndarray) -> float:
        return float(self.objective_vector @ np.asarray(x, dtype=float))

    def family_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for family, _ in self.annotations.values():
            counts[family] = counts.get(family, 0) + 1
        return counts


class ProblemBuilder:
    """Incremental construction of a :class:`MilpProblem`."""

    def __init__(self, name: str = "resilix", sense: str = "max",
                 index_letters: Mapping[str, str] | None = None):
        self.name = name
        self.sense = sense
        self.index_letters = dict(index_letters or {})
        self._vars: list[Variable] = []
        self._cons: list[Constraint] = []
        self._obj: dict[int, float] = {}
        self._ann: dict[int, tuple[str, tuple[int, ...]]] = {}
        self._index: dict[tuple[str, tuple[int, ...]], int] = {}
        self.meta: dict[str, object] = {}

    def var_name(self, family: str, indices: tuple[int, ...]) -> str:
        letters = self.index_letters.get(family, DEFAULT_INDEX_LETTERS)
        return "_".join([family] + [f"{letters[k]}{ix}" for k, ix in enumerate(indices)])

    def add_var(self, family: str, indices: tuple[int, ...] = (), lb: float = 0.0,
                ub: float = np.inf, kind: str = CONTINUOUS) -> int:
        key = (family, tuple(indices))
        if key in self._index:
            raise ValueError(f"duplicate variable {key}")
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        vid = len(self._vars)
        self._vars.append(Variable(self.var_name(family, key[1]), float(lb), float(ub), kind))
        self._ann[vid] = key
        self._index[key] = vid
        return vid

    def add_raw_var(self, var: Variable) -> int:
        """Append a variable that has no (family, indices) annotation."""
        self._vars.append(var)
        return len(self._vars) - 1

    def var(self, family: str, *indices: int) -> int:
        return self._index[(family, tuple(indices))]

    def add_constraint(self, terms: Iterable[tuple[int, float]], sense: str, rhs: float,
                       name: str | None = None) -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        merged: dict[int, float] = {}
        for vid, coef in terms:
            merged[vid] = merged.get(vid, 0.0) + float(coef)
        packed = tuple((vid, c) for vid, c in merged.items() if c != 0.0)
        cid = len(self._cons)
        self._cons.append(Constraint(packed, sense, float(rhs), name or f"c{cid}"))
        return cid

    def set_objective(self, terms: Iterable[tuple[int, float]]) -> None:
        self._obj = {}
        for vid, coef in terms:
            self._obj[vid] = self._obj.get(vid, 0.0) + float(coef)

    def build(self) -> MilpProblem:
        return MilpProblem(
            variables=tuple(self._vars),
            constraints=tuple(self._cons),
            objective=tuple((vid, c) for vid, c in self._obj.items() if c != 0.0),
            sense=self.sense,
            annotations=MappingProxyType(dict(self._ann)),
            meta=MappingProxyType(dict(self.meta)),
            name=self.name,
        )


def solution_violations(problem: MilpProblem, x: np.ndarray, tol: float = 1e-6,
                        int_tol: float = 1e-6, limit: int = 20) -> list[str]:
    """Bounds, integrality and constraint violations of ``x`` (at most ``limit`` reported)."""
    x = np.asarray(x, dtype=float)
    out: list[str] = []
    if x.shape != (problem.n_vars,):
        return [f"solution has {x.size} values, problem has {problem.n_vars} variables"]
    lb, ub = problem.bounds
    for k in np.flatnonzero((x < lb - tol) | (x > ub + tol))[:limit]:
        out.append(f"bound {problem.variables[k].name}={x[k]:g} not in [{lb[k]:g}, {ub[k]:g}]")
    frac = np.abs(x - np.round(x))
    for k in np.flatnonzero(problem.integral_mask & (frac > int_tol))[:limit]:
        out.append(f"integrality {problem.variables[k].name}={x[k]:g}")
    if problem.constraints:
        A, lo, hi = problem.matrix
        ax = A @ x
        scale = np.maximum(1.0, np.abs(np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))))
        bad = (ax < lo - tol * scale) | (ax > hi + tol * scale)
        for r in np.flatnonzero(bad)[:limit]:
            c = problem.constraints[r]
            out.append(f"constraint {c.name}: lhs={ax[r]:.9g} {c.sense} {c.rhs:.9g}")
    return out[:limit]
