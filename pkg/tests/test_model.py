"""Instance validation, round trips, and the JSON interchange format."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccobft.model import (
    NodeProfile,
    load_instance,
    ms_to_us,
    rtt,
    save_instance,
    us_to_ms,
    validate_instance,
)
from ccobft.topology import uniform_instance

from conftest import build_instance, uniform_us_instance


def test_minimal_feasible_instance_validates_clean(minimal_instance):
    assert validate_instance(minimal_instance) == []


def test_too_few_nodes_for_f_is_reported():
    inst = uniform_us_instance(3, 1000, 1000, 500)
    problems = validate_instance(inst)
    assert any("3 nodes" in p and "4" in p for p in problems)


def test_zero_off_diagonal_delay_is_reported():
    d = np.full((4, 4), 1000, dtype=np.int64)
    np.fill_diagonal(d, 0)
    d[1, 2] = 0
    inst = build_instance(d, [1000] * 4, [1000] * 4)
    assert any("positive" in p for p in validate_instance(inst))


def test_nonzero_diagonal_is_reported():
    d = np.full((4, 4), 1000, dtype=np.int64)
    np.fill_diagonal(d, 0)
    d[2, 2] = 7
    inst = build_instance(d, [1000] * 4, [1000] * 4)
    assert any("self-delay" in p for p in validate_instance(inst))


def test_dimension_mismatch_is_reported():
    d = np.full((4, 4), 1000, dtype=np.int64)
    np.fill_diagonal(d, 0)
    inst = build_instance(d, [1000] * 3, [1000] * 4)
    assert any("d_to_v" in p for p in validate_instance(inst))


def test_rates_outside_unit_interval_are_reported():
    profiles = [NodeProfile(0.0, 0.0)] * 3 + [NodeProfile(1.5, -0.1)]
    inst = uniform_us_instance(4, 1000, 1000, 500)
    inst = build_instance(
        inst.delays.d, inst.delays.to_v, inst.delays.from_v, profiles=profiles
    )
    problems = validate_instance(inst)
    assert any("byzantine" in p for p in problems)
    assert any("crash" in p for p in problems)


def test_validate_is_pure(minimal_instance):
    assert validate_instance(minimal_instance) == validate_instance(minimal_instance)


def test_rtt_is_the_two_leg_sum():
    d = [[0, 3000, 1000, 1000],
         [5000, 0, 1000, 1000],
         [1000, 1000, 0, 1000],
         [1000, 1000, 1000, 0]]
    inst = build_instance(d, [1000] * 4, [1000] * 4)
    assert rtt(inst.delays, 0, 1) == 8000
    assert rtt(inst.delays, 2, 3) == 2000


def test_rtt_rejects_equal_endpoints(minimal_instance):
    with pytest.raises(ValueError):
        rtt(minimal_instance.delays, 2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 5), st.integers(0, 5))
def test_rtt_matches_elementwise_oracle_and_is_symmetric(seed, i, j):
    inst = uniform_instance(n=6, f=1, seed=seed)
    if i == j:
        return
    d = inst.delays.d
    assert rtt(inst.delays, i, j) == int(d[i, j]) + int(d[j, i])
    assert rtt(inst.delays, i, j) == rtt(inst.delays, j, i)


def test_instance_json_round_trip(tmp_path):
    inst = uniform_instance(n=6, f=1, seed=11)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    loaded = load_instance(path)
    assert loaded.n == inst.n
    assert loaded.params == inst.params
    assert np.array_equal(loaded.delays.d, inst.delays.d)
    assert np.array_equal(loaded.delays.to_v, inst.delays.to_v)
    assert np.array_equal(loaded.delays.from_v, inst.delays.from_v)
    assert np.array_equal(loaded.verification.rtts, inst.verification.rtts)
    assert loaded.nodes == inst.nodes


def test_instance_json_uses_the_documented_keys(tmp_path):
    inst = uniform_instance(n=4, f=1, seed=0)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    import json

    doc = json.loads(path.read_text())
    assert set(doc) == {"f", "B", "C", "nodes", "d", "d_to_v", "d_from_v", "verification"}
    assert set(doc["nodes"][0]) == {"b", "c", "t"}
    assert set(doc["verification"]) == {"members", "leader", "rtts"}


def test_ms_us_conversion_round_trips_on_tick_values():
    assert ms_to_us(1.234) == 1234
    assert us_to_ms(1234) == 1.234
    assert ms_to_us(us_to_ms(987654)) == 987654


def test_with_tee_failures_marks_only_named_nodes():
    inst = uniform_us_instance(5, 1000, 1000, 500)
    shifted = inst.with_tee_failures({1, 3})
    assert [p.tee_failed for p in shifted.nodes] == [0, 1, 0, 1, 0]
    assert [p.tee_failed for p in inst.nodes] == [0] * 5
