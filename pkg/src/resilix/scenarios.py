"""Monte Carlo inverter-failure scenarios.

A scenario is a binary matrix of shape (T, I): flag (t, i) = 1 means inverter
``i`` fails at the end of interval ``t`` if it is used during ``t``.  Raw
samples are deduplicated into a weighted :class:`ScenarioSet`.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InputError

ProbabilityMode = Literal["empirical", "analytic"]
MODES = ("empirical", "analytic")


def sample_stream(seed: int, k: int) -> np.random.Generator:
    """Independent stream for sample ``k``; identical to child ``k`` of ``SeedSequence(seed).spawn``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def sample_failure_matrix(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One Bernoulli draw per cell, row-major (interval outer, inverter inner)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise InputError("probability matrix must have shape (T, I)", code="DIMENSION_MISMATCH")
    if p.size and (p.min() < 0 or p.max() > 1):
        raise InputError("probabilities must lie in [0, 1]", code="RANGE_VIOLATION")
    draws = rng.random(p.shape)
    # strict comparison keeps p=0 cells exactly zero; same law as X <= p
    return (draws < p).astype(np.uint8)


def _sample_range(p: np.ndarray, seed: int, start: int, stop: int) -> np.ndarray:
    out = np.empty((stop - start,) + p.shape, dtype=np.uint8)
    for k in range(start, stop):
        out[k - start] = sample_failure_matrix(p, sample_stream(seed, k))
    return out


def draw_samples(p: np.ndarray, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Raw samples, shape (count, T, I).  Output does not depend on ``workers``."""
    p = np.asarray(p, dtype=float)
    if workers <= 1 or count < 2 * workers:
        return _sample_range(p, seed, 0, count)
    bounds = np.linspace(0, count, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda ab: _sample_range(p, seed, ab[0], ab[1]), zip(bounds[:-1], bounds[1:]))
        return np.concatenate(list(parts), axis=0)


def analytic_weight(flags: np.ndarray, p: np.ndarray) -> float:
    """Product over cells of p^f (1-p)^(1-f)."""
    return float(np.prod(np.where(flags.astype(bool), p, 1.0 - p)))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Distinct failure matrices with probabilities.

    ``flags`` has shape (S, T, I); ``occurrences`` counts how many raw samples
    produced each distinct matrix.
    """

    flags: np.ndarray
    weights: np.ndarray
    occurrences: np.ndarray
    sample_count: int
    seed: int | None
    probability_mode: str = "empirical"

    def __post_init__(self):
        for name in ("flags", "weights", "occurrences"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return self.flags.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return (
            self.sample_count == other.sample_count
            and self.seed == other.seed
            and self.probability_mode == other.probability_mode
            and np.array_equal(self.flags, other.flags)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.occurrences, other.occurrences)
        )

    @property
    def horizon(self) -> int:
        return self.flags.shape[1]

    @property
    def n_inverters(self) -> int:
        return self.flags.shape[2]

    @classmethod
    def from_scenarios(cls, flags, weights, occurrences=None, seed=None, mode="empirical") -> "ScenarioSet":
        """Build a set from explicit matrices (tests, hand-made studies); weights are normalized."""
        flags = np.array(flags, dtype=np.uint8)  # copy: the set freezes its arrays
        if flags.ndim != 3:
            raise InputError("flags must have shape (S, T, I)", code="DIMENSION_MISMATCH")
        w = np.array(weights, dtype=float)
        if (w <= 0).any():
            raise InputError("scenario weights must be positive", code="RANGE_VIOLATION")
        w = w / w.sum()
        occ = np.ones(len(w), dtype=np.int64) if occurrences is None else np.array(occurrences, dtype=np.int64)
        return cls(flags, w, occ, int(occ.sum()), seed, mode)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sample_count": self.sample_count,
            "probability_mode": self.probability_mode,
            "scenarios": [
                {"flags": self.flags[k].tolist(), "weight": float(self.weights[k]),
                 "occurrences": int(self.occurrences[k])}
                for k in range(len(self))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSet":
        scen = doc["scenarios"]
        flags = np.array([s["flags"] for s in scen], dtype=np.uint8)
        if flags.ndim != 3:
            flags = flags.reshape(len(scen), 0, 0) if not scen else flags
        weights = np.array([s["weight"] for s in scen], dtype=float)
        occ = np.array([s.get("occurrences", 1) for s in scen], dtype=np.int64)
        return cls(flags, weights, occ, int(doc["sample_count"]), doc.get("seed"),
                   doc.get("probability_mode", "empirical"))

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSet":
        return cls.from_dict(json.loads(text))


def generate_scenario_set(
    p: np.ndarray,
    count: int,
    seed: int | None,
    mode: ProbabilityMode = "empirical",
    workers: int = 1,
) -> ScenarioSet:
    """Sample ``count`` failure matrices and reduce them to distinct weighted scenarios.

    Empirical weights are occurrence frequencies; analytic weights are the
    product-form probabilities renormalized over the distinct matrices seen.
    Distinct scenarios are ordered by first occurrence.
    """
    if seed is None:
        raise InputError("a seed is required; scenario generation is deterministic by contract",
                         code="SEED_REQUIRED")
    if int(seed) < 0:
        raise InputError("seed must be a non-negative integer", code="RANGE_VIOLATION")
    if count < 1:
        raise InputError("scenario count must be at least 1", code="RANGE_VIOLATION")
    if mode not in MODES:
        raise InputError(f"unknown probability mode {mode!r}", code="RANGE_VIOLATION")
    p = np.asarray(p, dtype=float)
    raw = draw_samples(p, count, int(seed), workers)
    flat = raw.reshape(count, -1)
    _, first, inverse, counts = np.unique(flat, axis=0, return_index=True, return_inverse=True,
                                          return_counts=True)
    order = np.argsort(first, kind="stable")
    flags = raw[first[order]]
    occurrences = counts[order].astype(np.int64)
    if mode == "empirical":
        weights = occurrences / float(count)
    else:
        weights = np.array([analytic_weight(f, p) for f in flags])
        weights = weights / weights.sum()
    return ScenarioSet(flags, weights, occurrences, int(count), int(seed), mode)


@dataclass(frozen=True)
class HistogramBin:
    weight: float
    raw_count: int


@dataclass(frozen=True)
class FailureHistogram:
    """Distribution of failure counts per scenario.

    ``bins`` is keyed by the total number of flags; ``distinct_inverter_bins``
    by the number of inverters flagged at least once.
    """

    bins: dict[int, HistogramBin]
    distinct_inverter_bins: dict[int, HistogramBin]
    sample_count: int

    def modal_bin(self) -> int:
        return max(self.bins, key=lambda k: (self.bins[k].raw_count, -k))

    def raw_count_at_least(self, k: int) -> int:
        return sum(b.raw_count for n, b in self.bins.items() if n >= k)

    def to_rows(self) -> list[tuple[int, int, float]]:
        return [(k, self.bins[k].raw_count, self.bins[k].weight) for k in sorted(self.bins)]


def _accumulate(keys: np.ndarray, weights: np.ndarray, occ: np.ndarray) -> dict[int, HistogramBin]:
    out: dict[int, HistogramBin] = {}
    for k in sorted(set(int(x) for x in keys)):
        mask = keys == k
        out[k] = HistogramBin(float(weights[mask].sum()), int(occ[mask].sum()))
    return out


def failure_count_histogram(scenarios: ScenarioSet) -> FailureHistogram:
    totals = scenarios.flags.reshape(len(scenarios), -1).sum(axis=1)
    distinct = scenarios.flags.any(axis=1).sum(axis=1) if len(scenarios) else totals
    return FailureHistogram(
        _accumulate(totals, scenarios.weights, scenarios.occurrences),
        _accumulate(distinct, scenarios.weights, scenarios.occurrences),
        scenarios.sample_count,
    )
