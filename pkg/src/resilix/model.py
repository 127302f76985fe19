"""Microgrid domain types, event failure profiles and input validation.

All power values are kW, durations are hours, probabilities are fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import Issue, SpecValidationError


@dataclass(frozen=True)
class GeneratorSpec:
    """A controllable (dispatchable) DER unit."""

    name: str
    p_min_kw: float
    p_max_kw: float
    ramp_kw_per_h: float
    op_cost_per_kwh: float = 0.0
    no_load_cost_per_h: float = 0.0
    startup_cost: float = 0.0
    initially_on: bool = False

    def ramp_per_interval(self, interval_hours: float) -> float:
        return self.ramp_kw_per_h * interval_hours


@dataclass(frozen=True)
class InverterSpec:
    """An inverter-interfaced renewable unit with a forecast output per interval."""

    name: str
    output_kw: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "output_kw", tuple(float(x) for x in self.output_kw))


@dataclass(frozen=True)
class LoadProfile:
    critical_kw: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "critical_kw", tuple(float(x) for x in self.critical_kw))


@dataclass(frozen=True)
class PortableDgTemplate:
    """Parameters for generators added by the enhancement step.

    Any field left as ``None`` is derived from the microgrid when the unit is
    added (see :func:`resilix.rop.enhance_with_dg`).
    """

    name: str | None = None
    p_min_kw: float | None = None
    p_max_kw: float | None = None
    ramp_kw_per_h: float | None = None
    op_cost_per_kwh: float | None = None
    no_load_cost_per_h: float | None = None
    startup_cost: float | None = None


@dataclass(frozen=True)
class MicrogridSpec:
    generators: tuple[GeneratorSpec, ...]
    inverters: tuple[InverterSpec, ...]
    load: LoadProfile
    interval_hours: float
    portable_dg_template: PortableDgTemplate | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "inverters", tuple(self.inverters))

    @property
    def horizon(self) -> int:
        return len(self.load.critical_kw)

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def n_inverters(self) -> int:
        return len(self.inverters)

    def inverter_output(self) -> np.ndarray:
        """Inverter output as an array of shape (T, I)."""
        if not self.inverters:
            return np.zeros((self.horizon, 0))
        return np.array([inv.output_kw for inv in self.inverters], dtype=float).T

    def critical_load(self) -> np.ndarray:
        return np.array(self.load.critical_kw, dtype=float)

    def with_generator(self, gen: GeneratorSpec) -> "MicrogridSpec":
        return replace(self, generators=self.generators + (gen,))


ProbabilityLike = float | tuple[float, ...]


@dataclass(frozen=True)
class Stage:
    """A run of consecutive intervals sharing one failure probability.

    ``failure_prob`` is either one probability for every inverter or a
    per-inverter vector.
    """

    intervals: int
    failure_prob: ProbabilityLike

    def __post_init__(self):
        if not isinstance(self.failure_prob, (int, float)):
            object.__setattr__(self, "failure_prob", tuple(float(p) for p in self.failure_prob))
        else:
            object.__setattr__(self, "failure_prob", float(self.failure_prob))


@dataclass(frozen=True)
class EventProfile:
    stages: tuple[Stage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def horizon(self) -> int:
        return sum(s.intervals for s in self.stages)

    @classmethod
    def uniform(cls, intervals: int, failure_prob: ProbabilityLike) -> "EventProfile":
        return cls((Stage(intervals, failure_prob),))


def _check_generator(gen: GeneratorSpec, where: str, issues: list[Issue]) -> None:
    if gen.p_min_kw < 0:
        issues.append(Issue("RANGE_VIOLATION", f"{where}.p_min_kw", f"negative minimum output {gen.p_min_kw}"))
    if gen.p_min_kw > gen.p_max_kw:
        issues.append(Issue(
            "RANGE_VIOLATION", f"{where}.p_min_kw",
            f"p_min_kw={gen.p_min_kw} exceeds p_max_kw={gen.p_max_kw}",
        ))
    if gen.ramp_kw_per_h < 0:
        issues.append(Issue("RANGE_VIOLATION", f"{where}.ramp_kw_per_h", "negative ramp rate"))
    for name in ("op_cost_per_kwh", "no_load_cost_per_h", "startup_cost"):
        if getattr(gen, name) < 0:
            issues.append(Issue("RANGE_VIOLATION", f"{where}.{name}", f"negative cost {getattr(gen, name)}"))


def _check_probability(p: ProbabilityLike, n_inv: int, where: str, issues: list[Issue]) -> None:
    values: Sequence[float]
    if isinstance(p, tuple):
        if len(p) != n_inv:
            issues.append(Issue(
                "HORIZON_MISMATCH", where,
                f"per-inverter probability vector has {len(p)} entries, expected {n_inv}",
            ))
        values = p
    else:
        values = (p,)
    for k, v in enumerate(values):
        if not (0.0 <= v <= 1.0):
            issues.append(Issue("RANGE_VIOLATION", f"{where}[{k}]" if isinstance(p, tuple) else where,
                                f"probability {v} outside [0, 1]"))


def collect_issues(spec: MicrogridSpec, event: EventProfile | None = None) -> list[Issue]:
    """Every violated invariant of ``spec`` (and ``event``), in field order."""
    issues: list[Issue] = []
    T = spec.horizon
    if T < 1:
        issues.append(Issue("HORIZON_MISMATCH", "load.critical_kw", "horizon must have at least one interval"))
    if not spec.generators and not spec.inverters:
        issues.append(Issue("RANGE_VIOLATION", "generators", "need at least one generator or inverter"))
    if not spec.interval_hours > 0:
        issues.append(Issue("RANGE_VIOLATION", "interval_hours", f"must be positive, got {spec.interval_hours}"))
    for k, gen in enumerate(spec.generators):
        _check_generator(gen, f"generators[{k}]", issues)
    for k, inv in enumerate(spec.inverters):
        if len(inv.output_kw) != T:
            issues.append(Issue(
                "HORIZON_MISMATCH", f"inverters[{k}].output_kw",
                f"{inv.name}: {len(inv.output_kw)} values, horizon is {T}",
            ))
        if any(x < 0 for x in inv.output_kw):
            issues.append(Issue("RANGE_VIOLATION", f"inverters[{k}].output_kw", f"{inv.name}: negative output"))
    if any(x < 0 for x in spec.load.critical_kw):
        issues.append(Issue("RANGE_VIOLATION", "load.critical_kw", "negative critical load"))
    tpl = spec.portable_dg_template
    if tpl is not None:
        for name in ("p_min_kw", "p_max_kw", "ramp_kw_per_h", "op_cost_per_kwh", "no_load_cost_per_h", "startup_cost"):
            val = getattr(tpl, name)
            if val is not None and val < 0:
                issues.append(Issue("RANGE_VIOLATION", f"portable_dg.{name}", f"negative value {val}"))
        if tpl.p_min_kw is not None and tpl.p_max_kw is not None and tpl.p_min_kw > tpl.p_max_kw:
            issues.append(Issue("RANGE_VIOLATION", "portable_dg.p_min_kw", "p_min_kw exceeds p_max_kw"))
    if event is not None:
        issues.extend(collect_event_issues(event, spec.n_inverters, T))
    return issues


def collect_event_issues(event: EventProfile, n_inverters: int, horizon: int | None = None) -> list[Issue]:
    issues: list[Issue] = []
    if not event.stages:
        issues.append(Issue("HORIZON_MISMATCH", "stages", "event has no stages"))
    for k, stage in enumerate(event.stages):
        if stage.intervals < 1:
            issues.append(Issue("RANGE_VIOLATION", f"stages[{k}].intervals", "stage length must be positive"))
        _check_probability(stage.failure_prob, n_inverters, f"stages[{k}].failure_prob", issues)
    if horizon is not None and event.horizon != horizon:
        issues.append(Issue(
            "HORIZON_MISMATCH", "stages",
            f"event covers {event.horizon} intervals, microgrid horizon is {horizon}",
        ))
    return issues


def validate_spec(spec: MicrogridSpec, event: EventProfile | None = None) -> MicrogridSpec:
    """Return ``spec`` unchanged, or raise :class:`SpecValidationError` listing every issue."""
    issues = collect_issues(spec, event)
    if issues:
        raise SpecValidationError(issues)
    return spec


def expand_event(event: EventProfile, inverter_count: int) -> np.ndarray:
    """Per-interval, per-inverter failure probabilities, shape (T, I)."""
    issues = collect_event_issues(event, inverter_count)
    if issues:
        raise SpecValidationError(issues)
    rows = []
    for stage in event.stages:
        if isinstance(stage.failure_prob, tuple):
            row = np.array(stage.failure_prob, dtype=float)
        else:
            row = np.full(inverter_count, stage.failure_prob, dtype=float)
        rows.extend([row] * stage.intervals)
    return np.array(rows, dtype=float).reshape(event.horizon, inverter_count)
