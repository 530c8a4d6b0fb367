"""Simulation results: per-transaction records and run-level summaries."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..model import us_to_ms

_PHASES = ("t_pre", "t_cv", "t_ver", "t_vc", "t_com")


@dataclass(frozen=True)
class TxRecord:
    request_id: int
    committee: int
    submit_us: int
    commit_us: int
    t_pre: int
    t_cv: int
    t_ver: int
    t_vc: int
    t_com: int
    retries: int = 0

    @property
    def latency_us(self) -> int:
        """Phase 2-5 latency; the client legs are deliberately excluded."""
        return self.t_pre + self.t_cv + self.t_ver + self.t_vc + self.t_com


@dataclass
class SimReport:
    records: list[TxRecord]
    total_requests: int
    stalled: int
    in_flight: int
    makespan_us: int
    fault_log: list[str] = field(default_factory=list)
    alarms: list[str] = field(default_factory=list)

    @property
    def committed(self) -> int:
        return len(self.records)

    @property
    def per_tx_latency_us(self) -> list[int]:
        return [r.latency_us for r in self.records]

    @property
    def throughput_ops(self) -> float:
        if not self.records or self.makespan_us <= 0:
            return 0.0
        return self.committed * 1_000_000 / self.makespan_us

    def phase_means_us(self) -> dict[str, float]:
        if not self.records:
            return {name: 0.0 for name in _PHASES}
        n = len(self.records)
        return {
            name: sum(getattr(r, name) for r in self.records) / n for name in _PHASES
        }

    def check_conservation(self) -> None:
        total = self.committed + self.stalled + self.in_flight
        if total != self.total_requests:
            raise AssertionError(
                f"conservation broken: {self.committed} committed + {self.stalled} "
                f"stalled + {self.in_flight} in flight != {self.total_requests}"
            )

    def summary_dict(self) -> dict:
        latencies = sorted(self.per_tx_latency_us)
        return {
            "total_requests": self.total_requests,
            "committed": self.committed,
            "stalled": self.stalled,
            "in_flight": self.in_flight,
            "makespan_ms": us_to_ms(self.makespan_us),
            "throughput_ops": self.throughput_ops,
            "latency_ms": {
                "mean": us_to_ms(round(sum(latencies) / len(latencies))) if latencies else 0.0,
                "median": us_to_ms(_percentile(latencies, 50.0)) if latencies else 0.0,
                "p99": us_to_ms(_percentile(latencies, 99.0)) if latencies else 0.0,
            },
            "phase_means_ms": {
                k: v / 1000.0 for k, v in self.phase_means_us().items()
            },
            "faults": list(self.fault_log),
            "alarms": list(self.alarms),
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary_dict(), indent=2, sort_keys=True))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["id", "committee", "submit_t", "commit_t", *_PHASES, "latency", "retries"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        r.request_id,
                        r.committee,
                        r.submit_us,
                        r.commit_us,
                        r.t_pre,
                        r.t_cv,
                        r.t_ver,
                        r.t_vc,
                        r.t_com,
                        r.latency_us,
                        r.retries,
                    ]
                )


def _percentile(sorted_values: list[int], pct: float) -> int:
    """Nearest-rank percentile over an already sorted list."""
    if not sorted_values:
        return 0
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]
