from dataclasses import replace

import numpy as np
import pytest

from resilix.errors import InputError, ModelError
from resilix.io import load_spec
from resilix.model import InverterSpec, LoadProfile, MicrogridSpec, PortableDgTemplate, expand_event
from resilix.rop import (
    CASE_TABLE,
    RopConfig,
    alpha_sweep,
    build_staged_event,
    enhance_with_dg,
    named_event,
    run_rop,
    run_rop_on,
    solve_rop,
    split_horizon,
)
from resilix.scenarios import ScenarioSet

from conftest import tiny_spec


def three_inverters(tpl=None):
    invs = tuple(InverterSpec(f"pv{k}", (x, x / 2)) for k, x in enumerate((30.0, 45.0, 40.0)))
    return MicrogridSpec((), invs, LoadProfile((10.0, 10.0)), 1.0, tpl)


def test_dg_sized_from_largest_inverter():
    out = enhance_with_dg(three_inverters())
    assert out.generators[-1].p_max_kw == 45.0
    assert out.generators[-1].name == "portable_pdg1"


def test_template_capacity_wins():
    out = enhance_with_dg(three_inverters(PortableDgTemplate(name="mobile", p_max_kw=80.0)))
    assert out.generators[-1].p_max_kw == 80.0 and out.generators[-1].name == "mobile_pdg1"


def test_two_enhancements_are_distinct():
    out = enhance_with_dg(enhance_with_dg(three_inverters()))
    assert [g.name for g in out.generators] == ["portable_pdg1", "portable_pdg2"]


def test_costs_copied_from_diesel_unit():
    spec = load_spec("testbed")
    dg = next(g for g in spec.generators if g.name.lower() == "dg")
    added = enhance_with_dg(spec).generators[-1]
    assert (added.op_cost_per_kwh, added.startup_cost) == (dg.op_cost_per_kwh, dg.startup_cost)


def test_no_reference_capacity():
    spec = tiny_spec(outputs=(), load=(1.0, 1.0))
    with pytest.raises(ModelError) as err:
        enhance_with_dg(spec)
    assert err.value.code == "NO_CAPACITY_REFERENCE"


def test_extreme_event_stages():
    ev = build_staged_event(["C2", "C6", "C2"], [1, 1, 1])
    assert [s.failure_prob for s in ev.stages] == [0.01, 0.05, 0.01]
    ev = build_staged_event(["C1"] * 3, [1, 1, 1])
    assert all(s.failure_prob == 0.005 for s in ev.stages)


def test_split_case_vector():
    p = expand_event(build_staged_event(["C3"], [2]), 10)
    assert p[0].tolist() == [0.01] * 5 + [0.02] * 5


def test_unknown_label():
    with pytest.raises(InputError) as err:
        build_staged_event(["C9"], [1])
    assert err.value.code == "UNKNOWN_CASE_LABEL"


def test_split_horizon():
    assert split_horizon(3, 3) == [1, 1, 1]
    assert split_horizon(5, 3) == [2, 2, 1]
    assert split_horizon(4, 3) == [1, 2, 1]
    with pytest.raises(InputError):
        split_horizon(2, 3)


def test_named_events_cover_horizon():
    for name in ("non-emergency", "moderate", "extreme", "C4"):
        assert named_event(name, 6).horizon == 6


def test_case_table_values():
    assert CASE_TABLE["C1"] == 0.005 and CASE_TABLE["C6"] == 0.05
    assert len(CASE_TABLE["C3"]) == 10


def test_seed_is_required():
    spec = load_spec("testbed")
    with pytest.raises(InputError) as err:
        run_rop(spec, named_event("extreme", spec.horizon), RopConfig(scenario_count=10))
    assert err.value.code == "SEED_REQUIRED"


def test_config_validation():
    with pytest.raises(InputError):
        RopConfig(target_sr=1.5)
    with pytest.raises(InputError):
        RopConfig(alpha=-1)


@pytest.fixture(scope="module")
def small_testbed():
    spec = load_spec("testbed")
    return spec, named_event("extreme", spec.horizon)


def test_alpha_zero_gives_one(small_testbed):
    spec, event = small_testbed
    res = alpha_sweep(spec, event, [0.0], RopConfig(scenario_count=100, seed=1))
    assert res[0][0] == 0.0 and res[0][1] == pytest.approx(1.0)


def test_alpha_sweep_sorted_and_monotone(small_testbed):
    spec, event = small_testbed
    res = alpha_sweep(spec, event, [1.05, 0.9, 1.0], RopConfig(scenario_count=100, seed=1))
    assert [a for a, _ in res] == [0.9, 1.0, 1.05]
    srs = [sr for _, sr in res]
    assert srs == sorted(srs, reverse=True) and srs[-1] == 0.0


def test_run_is_deterministic(small_testbed):
    spec, event = small_testbed
    cfg = RopConfig(scenario_count=150, seed=7, max_added_dgs=2)
    a, b = run_rop(spec, event, cfg), run_rop(spec, event, cfg)
    assert a.enhancement_trace == b.enhancement_trace
    assert np.array_equal(a.plan.commitment, b.plan.commitment)
    assert a.mem_sr == b.mem_sr


def test_trace_shape(small_testbed):
    spec, event = small_testbed
    rep = run_rop(spec, event, RopConfig(scenario_count=200, seed=7, max_added_dgs=3))
    srs = [sr for _, sr in rep.enhancement_trace]
    assert srs[0] == rep.rop_sr and srs == sorted(srs)
    assert rep.final_sr >= 0.95 or rep.enhancement_exhausted
    assert rep.added_dgs == len(srs) - 1 == rep.final_spec.n_generators - spec.n_generators
    assert rep.rop_sr >= rep.mem_sr


def test_exhaustion_is_reported():
    spec = tiny_spec(gens=(), outputs=((10.0, 10.0),), load=(10.0, 10.0))
    spec = replace(spec, portable_dg_template=PortableDgTemplate(p_max_kw=1.0))
    flags = np.array([[[1], [0]]], dtype=np.uint8)
    rep = run_rop_on(spec, ScenarioSet.from_scenarios(flags, [1], seed=0),
                     RopConfig(seed=0, max_added_dgs=2, target_sr=0.95))
    assert rep.enhancement_exhausted and [n for n, _ in rep.enhancement_trace] == [0, 1, 2]


def test_plan_validated_for_highs_backend(oracle_example):
    spec, scen = oracle_example
    assert solve_rop(spec, scen, 1.0, solver="highs").sr == pytest.approx(0.9)
    assert solve_rop(spec, scen, 1.0, solver="bundled", tie_break=True).sr == pytest.approx(0.9)
