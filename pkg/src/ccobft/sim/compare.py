"""Run several configurations under identical schedules and tabulate."""
from __future__ import annotations

import statistics
from dataclasses import dataclass

from ..cco.config import Configuration
from ..model import Instance, us_to_ms
from .report import SimReport
from .runner import run
from .workload import FaultPlan, Workload, derive_seed


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    mean_latency_ms: float
    median_latency_ms: float
    p99_latency_ms: float
    mean_throughput_ops: float
    committed: int
    stalled: int
    latency_improvement_pct: float
    throughput_improvement_pct: float


def compare(
    instance: Instance,
    configs: list[tuple[str, Configuration]],
    workload: Workload,
    faults: FaultPlan | None = None,
    seed: int = 0,
    repetitions: int = 1,
    baseline: str | None = None,
    **run_kwargs,
) -> list[ComparisonRow]:
    """Simulate every configuration under the same derived seed sequence.

    Improvement percentages are relative to the named baseline row (the
    first configuration when not named); positive means better, lower
    latency or higher throughput.
    """
    if not configs:
        raise ValueError("need at least one configuration")
    baseline_name = baseline if baseline is not None else configs[0][0]
    if baseline_name not in {name for name, _ in configs}:
        raise ValueError(f"baseline {baseline_name!r} is not among the configurations")
    reports: dict[str, list[SimReport]] = {}
    for name, config in configs:
        reports[name] = [
            run(instance, config, workload, faults, derive_seed(seed, rep), **run_kwargs)
            for rep in range(repetitions)
        ]

    def aggregate(name: str) -> tuple[float, float, float, float, int, int]:
        latencies = [l for r in reports[name] for l in r.per_tx_latency_us]
        throughputs = [r.throughput_ops for r in reports[name]]
        committed = sum(r.committed for r in reports[name])
        stalled = sum(r.stalled for r in reports[name])
        if not latencies:
            return 0.0, 0.0, 0.0, statistics.fmean(throughputs), committed, stalled
        ordered = sorted(latencies)
        p99 = ordered[min(len(ordered) - 1, round(0.99 * (len(ordered) - 1)))]
        return (
            us_to_ms(round(statistics.fmean(latencies))),
            us_to_ms(round(statistics.median(latencies))),
            us_to_ms(p99),
            statistics.fmean(throughputs),
            committed,
            stalled,
        )

    base_mean, _, _, base_tput, _, _ = aggregate(baseline_name)
    rows = []
    for name, _ in configs:
        mean_lat, med_lat, p99_lat, tput, committed, stalled = aggregate(name)
        lat_gain = 100.0 * (base_mean - mean_lat) / base_mean if base_mean > 0 else 0.0
        tput_gain = 100.0 * (tput - base_tput) / base_tput if base_tput > 0 else 0.0
        rows.append(
            ComparisonRow(
                name=name,
                mean_latency_ms=mean_lat,
                median_latency_ms=med_lat,
                p99_latency_ms=p99_lat,
                mean_throughput_ops=tput,
                committed=committed,
                stalled=stalled,
                latency_improvement_pct=lat_gain,
                throughput_improvement_pct=tput_gain,
            )
        )
    return rows
