import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilix.errors import InputError
from resilix.scenarios import (
    ScenarioSet,
    draw_samples,
    failure_count_histogram,
    generate_scenario_set,
    sample_failure_matrix,
    sample_stream,
)


def test_extreme_probabilities():
    rng = sample_stream(0, 0)
    assert not sample_failure_matrix(np.zeros((3, 4)), rng).any()
    assert sample_failure_matrix(np.ones((3, 4)), rng).all()


def test_mean_flag_count():
    raw = draw_samples(np.full((3, 10), 0.01), 10_000, seed=5)
    assert abs(raw.reshape(10_000, -1).sum(axis=1).mean() - 0.30) <= 0.02


def test_degenerate_set():
    s = generate_scenario_set(np.zeros((2, 3)), 10_000, seed=1)
    assert len(s) == 1 and s.weights.tolist() == [1.0] and not s.flags.any()


def test_all_zero_weight():
    s = generate_scenario_set(np.full((3, 10), 0.01), 10_000, seed=2)
    zero = [k for k in range(len(s)) if not s.flags[k].any()]
    assert len(zero) == 1
    assert abs(s.weights[zero[0]] - 0.99 ** 30) <= 0.015


def test_seed_required():
    with pytest.raises(InputError) as err:
        generate_scenario_set(np.zeros((1, 1)), 10, seed=None)
    assert err.value.code == "SEED_REQUIRED"


def test_bad_probabilities():
    with pytest.raises(InputError):
        generate_scenario_set(np.full((1, 2), 1.5), 10, seed=0)


def test_analytic_weights():
    p = np.array([[0.1, 0.3]])
    s = generate_scenario_set(p, 5_000, seed=4, mode="analytic")
    assert len(s) == 4
    expected = {(0, 0): 0.63, (1, 0): 0.07, (0, 1): 0.27, (1, 1): 0.03}
    for k in range(len(s)):
        assert s.weights[k] == pytest.approx(expected[tuple(s.flags[k, 0])])


def test_json_round_trip():
    s = generate_scenario_set(np.full((2, 3), 0.2), 200, seed=9)
    back = ScenarioSet.from_json(s.to_json())
    assert back == s and back.to_json() == s.to_json()


def test_caller_arrays_stay_writable():
    flags = np.zeros((1, 2, 2), dtype=np.uint8)
    s = ScenarioSet.from_scenarios(flags, [1.0])
    flags[0, 0, 0] = 1
    assert not s.flags.any() and not s.flags.flags.writeable


def test_histogram_single_zero_scenario():
    s = generate_scenario_set(np.zeros((2, 2)), 50, seed=0)
    h = failure_count_histogram(s)
    assert list(h.bins) == [0] and h.bins[0].weight == 1.0 and h.bins[0].raw_count == 50


def test_histogram_distinct_inverters():
    flags = np.array([[[1, 0], [1, 0]], [[1, 0], [0, 1]]])
    h = failure_count_histogram(ScenarioSet.from_scenarios(flags, [1, 1], occurrences=[3, 1]))
    assert h.bins[2].raw_count == 4
    assert {k: b.raw_count for k, b in h.distinct_inverter_bins.items()} == {1: 3, 2: 1}


probs = st.floats(0.0, 1.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(T=st.integers(1, 3), I=st.integers(1, 4), count=st.integers(1, 300),
       seed=st.integers(0, 2**32 - 1), p=probs, mode=st.sampled_from(["empirical", "analytic"]))
def test_set_invariants(T, I, count, seed, p, mode):
    grid = np.full((T, I), p)
    s = generate_scenario_set(grid, count, seed, mode=mode)
    assert s.flags.shape[1:] == (T, I)
    assert int(s.occurrences.sum()) == count == s.sample_count
    assert s.weights.sum() == pytest.approx(1.0)
    assert len({f.tobytes() for f in s.flags}) == len(s)
    if mode == "empirical":
        assert np.allclose(s.weights, s.occurrences / count)
    h = failure_count_histogram(s)
    assert sum(b.raw_count for b in h.bins.values()) == count
    assert sum(b.raw_count for b in h.distinct_inverter_bins.values()) == count


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), workers=st.integers(1, 4), count=st.integers(1, 200))
def test_workers_do_not_change_output(seed, workers, count):
    grid = np.full((2, 3), 0.3)
    a = generate_scenario_set(grid, count, seed)
    b = generate_scenario_set(grid, count, seed, workers=workers)
    assert a.to_json() == b.to_json()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lo=probs, hi=probs)
def test_flags_monotone_in_p_for_one_seed(seed, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    a = draw_samples(np.full((2, 3), lo), 30, seed)
    b = draw_samples(np.full((2, 3), hi), 30, seed)
    assert np.all(a <= b)
