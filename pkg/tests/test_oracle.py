import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilix.errors import ModelError
from resilix.oracle import OracleLimits, brute_force_sr
from resilix.scenarios import ScenarioSet

from conftest import random_instance, tiny_spec


def test_flagged_scenario_fails(oracle_example):
    spec, scen = oracle_example
    res = brute_force_sr(spec, scen, 1.0)
    assert res.sr == pytest.approx(0.9)
    assert res.per_scenario_success.tolist() == [1, 0]


def test_all_zero_with_capacity():
    spec = tiny_spec(gens=((0, 20, 20),))
    assert brute_force_sr(spec, ScenarioSet.from_scenarios(np.zeros((1, 2, 1)), [1]), 1.0).sr == 1.0


def test_short_capacity_is_zero():
    spec = tiny_spec(load=(10.0, 16.0))
    scen = ScenarioSet.from_scenarios(np.zeros((1, 2, 1)), [1])
    assert brute_force_sr(spec, scen, 1.0).sr == 0.0


def test_size_limit():
    spec = tiny_spec()
    scen = ScenarioSet.from_scenarios(np.zeros((1, 2, 1)), [1])
    with pytest.raises(ModelError) as err:
        brute_force_sr(spec, scen, 1.0, OracleLimits(max_commitment_bits=1))
    assert err.value.code == "SIZE_LIMIT_EXCEEDED"


def test_ramp_never_lowers_sr():
    # surplus is allowed, so a unit can hold its output flat across a load jump
    scen = ScenarioSet.from_scenarios(np.zeros((1, 2, 1)), [1])
    slow = tiny_spec(gens=((0, 10, 0),), outputs=((0.0, 0.0),), load=(0.0, 6.0))
    assert brute_force_sr(slow, scen, 1.0).sr == 1.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), lo=st.floats(0, 1), hi=st.floats(0, 1))
def test_monotone_in_alpha(seed, lo, hi):
    spec, scen, _ = random_instance(np.random.default_rng(seed), max_scenarios=8)
    lo, hi = min(lo, hi), max(lo, hi)
    assert brute_force_sr(spec, scen, lo).sr >= brute_force_sr(spec, scen, hi).sr - 1e-12
