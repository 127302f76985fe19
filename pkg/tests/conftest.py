from __future__ import annotations

import numpy as np
import pytest

from resilix.model import GeneratorSpec, InverterSpec, LoadProfile, MicrogridSpec
from resilix.scenarios import ScenarioSet

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def tiny_spec(gens=((0.0, 5.0, 100.0),), outputs=((10.0, 10.0),), load=(10.0, 10.0), hours=1.0) -> MicrogridSpec:
    return MicrogridSpec(
        tuple(GeneratorSpec(f"g{k}", lo, hi, r) for k, (lo, hi, r) in enumerate(gens)),
        tuple(InverterSpec(f"i{k}", out) for k, out in enumerate(outputs)),
        LoadProfile(load),
        hours,
    )


@pytest.fixture
def oracle_example() -> tuple[MicrogridSpec, ScenarioSet]:
    """1 generator (0..5 kW), 1 inverter at 10 kW, load 10 kW over two intervals."""
    spec = tiny_spec()
    flags = np.array([[[0], [0]], [[1], [0]]], dtype=np.uint8)
    return spec, ScenarioSet.from_scenarios(flags, [0.9, 0.1])


def random_instance(rng: np.random.Generator, max_gens: int = 2, max_t: int = 3, max_inv: int = 2,
                    max_scenarios: int = 16) -> tuple[MicrogridSpec, ScenarioSet, float]:
    """Random tiny instance: small integer capacities, loads at 30-100% of capacity."""
    G = int(rng.integers(1, max_gens + 1))
    T = int(rng.integers(1, max_t + 1))
    I = int(rng.integers(1, max_inv + 1))
    gens = []
    for g in range(G):
        pmax = float(rng.integers(2, 12))
        pmin = float(rng.integers(0, int(pmax) // 2 + 1))
        gens.append(GeneratorSpec(f"g{g}", pmin, pmax, float(rng.choice([1, 3, 100]))))
    out = rng.integers(0, 10, (I, T)).astype(float)
    invs = [InverterSpec(f"i{i}", tuple(out[i])) for i in range(I)]
    cap = sum(g.p_max_kw for g in gens) + out.sum(axis=0)
    load = LoadProfile(tuple(float(np.round(c * rng.uniform(0.3, 1.0) * 2) / 2) for c in cap))
    spec = MicrogridSpec(tuple(gens), tuple(invs), load, 1.0)
    S = int(rng.integers(1, max_scenarios + 1))
    draws = (rng.random((64, T, I)) < rng.uniform(0.1, 0.5)).astype(np.uint8)
    _, first = np.unique(draws.reshape(64, -1), axis=0, return_index=True)
    flags = draws[np.sort(first)][:S]
    scenarios = ScenarioSet.from_scenarios(flags, rng.random(len(flags)) + 0.1)
    alpha = float(rng.choice([0.8, 1.0]))
    return spec, scenarios, alpha
