"""Event-driven simulator: timing fidelity, faults, and reporting."""
from __future__ import annotations

import json

import pytest

from ccobft.cco import solve_exact
from ccobft.model import NodeProfile
from ccobft.sim import (
    Arrival,
    FaultPlan,
    Target,
    Workload,
    compare,
    random_configuration,
    run,
    sample_fault_plan,
)

from conftest import build_instance, uniform_us_instance


@pytest.fixture(scope="module")
def eight_node():
    inst = uniform_us_instance(8, 1000, 1000, 500)
    return inst, solve_exact(inst).config


def test_single_request_matches_the_analytic_latency(minimal_instance):
    result = solve_exact(minimal_instance)
    report = run(minimal_instance, result.config, Workload(total_requests=1))
    assert report.committed == 1
    assert report.records[0].latency_us == result.latency.t_tr


def test_every_transaction_matches_analytic_in_a_quiet_run(eight_node):
    inst, config = eight_node
    result = solve_exact(inst)
    report = run(inst, config, Workload(total_requests=6))
    assert report.committed == 6
    assert all(r.latency_us == result.latency.t_tr for r in report.records)


def test_runs_are_byte_identical_per_seed(eight_node, tmp_path):
    inst, config = eight_node
    workload = Workload(total_requests=6, payload_bytes=512)
    paths = []
    for tag in ("a", "b"):
        report = run(inst, config, workload, seed=99)
        csv_path = tmp_path / f"{tag}.csv"
        json_path = tmp_path / f"{tag}.json"
        report.write_csv(csv_path)
        report.write_json(json_path)
        paths.append((csv_path, json_path))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


def test_request_conservation_holds(eight_node):
    inst, config = eight_node
    report = run(inst, config, Workload(total_requests=10))
    report.check_conservation()
    assert report.committed + report.stalled + report.in_flight == 10


def test_crashed_follower_is_replaced_and_the_run_stays_live(minimal_instance):
    config = solve_exact(minimal_instance).config
    leader = config.leaders()[0]
    victim = config.active_by_leader()[leader][0]
    faults = FaultPlan(crashes={victim: 0})
    report = run(minimal_instance, config, Workload(total_requests=3), faults)
    assert report.stalled == 0
    assert report.committed == 3
    assert any(r.retries >= 1 for r in report.records)
    assert any("crashed" in line for line in report.fault_log)


def test_crashed_leader_stalls_its_committee_without_deadlock(eight_node):
    inst, config = eight_node
    dead_leader = config.leaders()[0]
    faults = FaultPlan(crashes={dead_leader: 0})
    report = run(inst, config, Workload(total_requests=6), faults)
    report.check_conservation()
    assert report.stalled >= 1
    assert report.committed >= 1
    assert any("lost its leader" in line for line in report.fault_log)


def test_tee_failure_switches_to_fallback_and_keeps_committing(eight_node):
    inst, config = eight_node
    leader = config.leaders()[0]
    faults = FaultPlan(tee_failures={leader: 20_000})
    report = run(inst, config, Workload(total_requests=12), faults)
    assert report.stalled == 0
    assert report.committed == 12
    assert any("lost its TEE" in line for line in report.fault_log)
    assert any("switched to fallback" in line for line in report.fault_log)
    assert any("reoptimized in place" in line for line in report.fault_log)
    assert report.alarms == []


def test_tee_recovery_only_helps_future_configurations(eight_node):
    inst, config = eight_node
    leader = config.leaders()[0]
    faults = FaultPlan(tee_failures={leader: 20_000})
    report = run(
        inst, config, Workload(total_requests=12), faults,
        tee_recoveries={leader: 60_000},
    )
    assert any("TEE recovered" in line for line in report.fault_log)
    # The committee does not leave fallback mid-run.
    assert sum("switched to fallback" in line for line in report.fault_log) == 1
    assert report.committed == 12


def test_verification_cost_saturates_throughput(eight_node):
    inst, config = eight_node
    workload = Workload(total_requests=20)
    free = run(inst, config, workload)
    priced = run(inst, config, workload, verify_cost_us=4000)
    assert priced.throughput_ops < free.throughput_ops
    assert priced.makespan_us > free.makespan_us


def test_poisson_round_robin_commits_everything(eight_node):
    inst, config = eight_node
    workload = Workload(
        total_requests=10, arrival=Arrival.POISSON, rate_per_s=200.0
    )
    report = run(inst, config, workload, seed=7)
    report.check_conservation()
    assert report.committed == 10
    assert {r.committee for r in report.records} == set(config.leaders())


def test_poisson_pinned_targets_one_committee(eight_node):
    inst, config = eight_node
    pinned = config.leaders()[1]
    workload = Workload(
        total_requests=8, arrival=Arrival.POISSON, rate_per_s=150.0,
        target=Target.PINNED, pinned_committee=pinned,
    )
    report = run(inst, config, workload, seed=7)
    assert report.committed == 8
    assert {r.committee for r in report.records} == {pinned}


def test_payload_transmission_raises_latency(eight_node):
    inst, config = eight_node
    light = run(inst, config, Workload(total_requests=6, payload_bytes=0))
    heavy = run(inst, config, Workload(total_requests=6, payload_bytes=1_000_000))
    light_mean = sum(light.per_tx_latency_us) / light.committed
    heavy_mean = sum(heavy.per_tx_latency_us) / heavy.committed
    assert heavy_mean > light_mean
    assert heavy.throughput_ops < light.throughput_ops


def test_client_delay_stretches_makespan_but_not_phase_latency(eight_node):
    inst, config = eight_node
    near = run(inst, config, Workload(total_requests=6))
    far = run(inst, config, Workload(total_requests=6), client_delay_us=5000)
    assert far.per_tx_latency_us == near.per_tx_latency_us
    assert far.makespan_us > near.makespan_us


def test_trace_records_follow_the_schema(eight_node, tmp_path):
    inst, config = eight_node
    trace_path = tmp_path / "trace.jsonl"
    run(inst, config, Workload(total_requests=2), trace_path=trace_path)
    lines = trace_path.read_text().splitlines()
    assert lines
    last_t = 0
    for line in lines:
        record = json.loads(line)
        assert set(record) == {"t", "from", "to", "kind", "committee", "seq"}
        assert isinstance(record["t"], int)
        assert record["t"] >= last_t
        last_t = record["t"]


# -- workload and fault plan validation ---------------------------------------


def test_workload_rejects_bad_shapes():
    with pytest.raises(ValueError, match="positive"):
        Workload(total_requests=0).validate()
    with pytest.raises(ValueError, match="payload"):
        Workload(total_requests=1, payload_bytes=-1).validate()
    with pytest.raises(ValueError, match="rate"):
        Workload(total_requests=1, arrival=Arrival.POISSON, rate_per_s=0.0).validate()


def test_fault_plan_enforces_the_faulty_fraction_cap():
    with pytest.raises(ValueError, match="cap"):
        FaultPlan(crashes={1: 0, 2: 0}).validate(4)
    with pytest.raises(ValueError, match="unknown"):
        FaultPlan(crashes={9: 0}).validate(4)
    FaultPlan(crashes={1: 0}).validate(4)


def test_sampled_plans_truncate_keeping_the_lowest_ids():
    n = 10
    profiles = [NodeProfile(0.0, 1.0) for _ in range(n)]
    import numpy as np

    d = np.full((n, n), 1000, dtype=np.int64)
    np.fill_diagonal(d, 0)
    inst = build_instance(d, [1000] * n, [1000] * n, profiles=profiles)
    plan = sample_fault_plan(inst, seed=3)
    assert plan.faulty_nodes() == {0, 1, 2}


# -- configuration comparison --------------------------------------------------


def test_compare_ranks_the_optimized_configuration_first(eight_node):
    inst, config = eight_node
    rows = compare(
        inst,
        [("optimized", config), ("random", random_configuration(inst, seed=1))],
        Workload(total_requests=6),
        seed=5,
    )
    assert [row.name for row in rows] == ["optimized", "random"]
    optimized, rando = rows
    assert optimized.mean_latency_ms <= rando.mean_latency_ms
    assert rando.latency_improvement_pct <= 0.0


def test_compare_reports_zero_improvement_for_identical_configs(eight_node):
    inst, config = eight_node
    rows = compare(
        inst,
        [("a", config), ("b", config)],
        Workload(total_requests=4),
        seed=5,
        repetitions=2,
    )
    assert rows[1].latency_improvement_pct == 0.0
    assert rows[1].throughput_improvement_pct == 0.0


def test_compare_produces_one_row_per_configuration(eight_node):
    inst, config = eight_node
    configs = [
        ("optimized", config),
        ("random-1", random_configuration(inst, seed=1)),
        ("random-2", random_configuration(inst, seed=2)),
    ]
    rows = compare(inst, configs, Workload(total_requests=4), repetitions=2)
    assert len(rows) == 3
    assert all(row.committed == 8 for row in rows)
