"""Sweep campaigns behind the ``experiment`` subcommand.

Each sweep runs a seeded grid of simulations, aggregates per-axis metrics,
and returns plain tables ready for CSV export. Cells are independent, so a
process pool can execute them; a failed cell is recorded in its row and the
sweep continues.
"""
from __future__ import annotations

import csv
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

from .cco import evaluate, solve_heuristic
from .sim import (
    FaultPlan,
    Workload,
    closed_loop_throughput_ops,
    derive_seed,
    leader_based_latency_us,
    random_configuration,
    run,
    tee_assisted_latency_us,
)
from .topology import clustered_instance

JOBS_ENV = "CCOBFT_JOBS"

NODE_SIZES = (40, 80, 120, 160, 200, 240)
PAYLOAD_SIZES = (0, 1_000, 10_000, 100_000, 1_000_000)
TEE_FAILURE_FRACTION = 0.3

# Verification service cost that makes the node sweep approach its plateau
# (1e6 / cost op/s) inside the swept range.
NODE_SWEEP_VERIFY_COST_US = 1000

_CELL_FIELDS = (
    "axis",
    "system",
    "seed",
    "latency_ms",
    "latency_p99_ms",
    "throughput_ops",
    "committed",
    "stalled",
    "error",
)


def default_jobs() -> int:
    """Worker count: the CCOBFT_JOBS variable if set, else the core count."""
    raw = os.environ.get(JOBS_ENV, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1


@dataclass
class SweepResult:
    name: str
    axis_label: str
    cells: list[dict]
    tables: dict[str, list[dict]]

    @property
    def errors(self) -> list[str]:
        return [
            f"{c['system']} {self.axis_label}={c['axis']} seed={c['seed']}: {c['error']}"
            for c in self.cells
            if c["error"]
        ]


# -- cell helpers --------------------------------------------------------------


def _sim_row(axis: int, system: str, seed: int, report) -> dict:
    summary = report.summary_dict()
    return {
        "axis": axis,
        "system": system,
        "seed": seed,
        "latency_ms": summary["latency_ms"]["mean"],
        "latency_p99_ms": summary["latency_ms"]["p99"],
        "throughput_ops": round(summary["throughput_ops"], 6),
        "committed": report.committed,
        "stalled": report.stalled,
        "error": "",
    }


def _analytic_row(axis: int, system: str, seed: int, latency_us: int) -> dict:
    return {
        "axis": axis,
        "system": system,
        "seed": seed,
        "latency_ms": latency_us / 1000.0,
        "latency_p99_ms": latency_us / 1000.0,
        "throughput_ops": round(closed_loop_throughput_ops(latency_us), 6),
        "committed": None,
        "stalled": None,
        "error": "",
    }


def _error_row(axis: int, system: str, seed: int, exc: Exception) -> dict:
    return {
        "axis": axis,
        "system": system,
        "seed": seed,
        "latency_ms": None,
        "latency_p99_ms": None,
        "throughput_ops": None,
        "committed": None,
        "stalled": None,
        "error": f"{type(exc).__name__}: {exc}",
    }


def _node_cell(task: tuple[int, int, int]) -> list[dict]:
    n, seed, verify_cost_us = task
    systems = ("cco", "random", "leader_based", "tee_assisted")
    try:
        inst = clustered_instance(n=n, f=1, seed=seed)
    except Exception as exc:
        return [_error_row(n, system, seed, exc) for system in systems]
    workload = Workload(total_requests=3 * (n // 4))
    rows = []
    try:
        config = solve_heuristic(inst, seed=seed).config
        report = run(inst, config, workload, seed=seed, verify_cost_us=verify_cost_us)
        rows.append(_sim_row(n, "cco", seed, report))
    except Exception as exc:
        rows.append(_error_row(n, "cco", seed, exc))
    try:
        config = random_configuration(inst, seed)
        report = run(inst, config, workload, seed=seed, verify_cost_us=verify_cost_us)
        rows.append(_sim_row(n, "random", seed, report))
    except Exception as exc:
        rows.append(_error_row(n, "random", seed, exc))
    for system, latency_fn in (
        ("leader_based", leader_based_latency_us),
        ("tee_assisted", tee_assisted_latency_us),
    ):
        try:
            rows.append(_analytic_row(n, system, seed, latency_fn(inst)))
        except Exception as exc:
            rows.append(_error_row(n, system, seed, exc))
    return rows


def _payload_cell(task: tuple[int, int, tuple[int, ...], float]) -> list[dict]:
    n, seed, payloads, bandwidth_bps = task
    systems = ("cco", "random", "leader_based", "tee_assisted")
    try:
        inst = clustered_instance(n=n, f=1, seed=seed)
        cco_config = solve_heuristic(inst, seed=seed).config
        rand_config = random_configuration(inst, seed)
    except Exception as exc:
        return [
            _error_row(p, system, seed, exc) for p in payloads for system in systems
        ]
    rows = []
    for payload in payloads:
        workload = Workload(total_requests=3 * (n // 4), payload_bytes=payload)
        for system, config in (("cco", cco_config), ("random", rand_config)):
            try:
                report = run(
                    inst, config, workload, seed=seed, bandwidth_bps=bandwidth_bps
                )
                rows.append(_sim_row(payload, system, seed, report))
            except Exception as exc:
                rows.append(_error_row(payload, system, seed, exc))
        for system, latency_fn in (
            ("leader_based", leader_based_latency_us),
            ("tee_assisted", tee_assisted_latency_us),
        ):
            try:
                latency = latency_fn(inst, payload, bandwidth_bps)
                rows.append(_analytic_row(payload, system, seed, latency))
            except Exception as exc:
                rows.append(_error_row(payload, system, seed, exc))
    return rows


def _fallback_cell(task: tuple[int, int, float]) -> list[dict]:
    n, seed, fraction = task
    systems = ("adaptive", "fallback_all")
    try:
        inst = clustered_instance(n=n, f=1, seed=seed)
        solved = solve_heuristic(inst, seed=seed)
        failed = sorted(random.Random(seed).sample(range(n), int(n * fraction)))
        inject_at = round(2.5 * evaluate(inst, solved.config).t_tr)
        plan = FaultPlan(tee_failures={i: inject_at for i in failed})
        workload = Workload(total_requests=6 * (n // 4))
    except Exception as exc:
        return [_error_row(seed, system, seed, exc) for system in systems]
    rows = []
    try:
        report = run(inst, solved.config, workload, plan, seed=seed)
        rows.append(_sim_row(seed, "adaptive", seed, report))
    except Exception as exc:
        rows.append(_error_row(seed, "adaptive", seed, exc))
    try:
        config = random_configuration(inst, seed, fallback_all=True)
        report = run(inst, config, workload, plan, seed=seed)
        rows.append(_sim_row(seed, "fallback_all", seed, report))
    except Exception as exc:
        rows.append(_error_row(seed, "fallback_all", seed, exc))
    return rows


def _map_cells(fn, tasks: list, jobs: int) -> list[dict]:
    if jobs > 1 and len(tasks) > 1:
        try:
            with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
                batches = list(pool.map(fn, tasks))
        except (OSError, RuntimeError):
            batches = [fn(task) for task in tasks]
    else:
        batches = [fn(task) for task in tasks]
    cells = [row for batch in batches for row in batch]
    cells.sort(key=lambda c: (c["axis"], c["system"], c["seed"]))
    return cells


def _aggregate(name: str, axis_label: str, cells: list[dict]) -> SweepResult:
    grouped: dict[str, dict[int, list[dict]]] = {}
    for cell in cells:
        grouped.setdefault(cell["system"], {}).setdefault(cell["axis"], []).append(cell)
    tables = {}
    for system in sorted(grouped):
        rows = []
        for axis in sorted(grouped[system]):
            group = grouped[system][axis]
            ok = [c for c in group if not c["error"]]
            row = {
                axis_label: axis,
                "latency_ms": round(fmean(c["latency_ms"] for c in ok), 6) if ok else None,
                "latency_p99_ms": (
                    round(fmean(c["latency_p99_ms"] for c in ok), 6) if ok else None
                ),
                "throughput_ops": (
                    round(fmean(c["throughput_ops"] for c in ok), 6) if ok else None
                ),
                "committed": sum(c["committed"] for c in ok if c["committed"] is not None)
                or None,
                "stalled": sum(c["stalled"] for c in ok if c["stalled"] is not None),
                "seeds_ok": len(ok),
                "failed_cells": len(group) - len(ok),
            }
            if all(c["committed"] is None for c in ok):
                row["committed"] = None
                row["stalled"] = None
            rows.append(row)
        tables[f"{name}_{system}"] = rows
    return SweepResult(name=name, axis_label=axis_label, cells=cells, tables=tables)


# -- public sweeps --------------------------------------------------------------


def node_sweep(
    sizes: tuple[int, ...] = NODE_SIZES,
    seeds: int = 3,
    base_seed: int = 2026,
    verify_cost_us: int = NODE_SWEEP_VERIFY_COST_US,
    jobs: int | None = None,
) -> SweepResult:
    """Throughput and latency against node count on clustered topologies."""
    tasks = [
        (n, derive_seed(derive_seed(base_seed, n), i), verify_cost_us)
        for n in sizes
        for i in range(seeds)
    ]
    cells = _map_cells(_node_cell, tasks, jobs if jobs is not None else default_jobs())
    return _aggregate("node_sweep", "n", cells)


def payload_sweep(
    payloads: tuple[int, ...] = PAYLOAD_SIZES,
    n: int = 40,
    seeds: int = 3,
    base_seed: int = 2026,
    bandwidth_bps: float = 1e9,
    jobs: int | None = None,
) -> SweepResult:
    """Throughput and latency against payload size at a fixed node count."""
    tasks = [
        (n, derive_seed(base_seed, i), tuple(payloads), bandwidth_bps)
        for i in range(seeds)
    ]
    cells = _map_cells(
        _payload_cell, tasks, jobs if jobs is not None else default_jobs()
    )
    return _aggregate("payload_sweep", "payload_bytes", cells)


def fallback_compare(
    n: int = 40,
    seeds: int = 30,
    base_seed: int = 2026,
    fraction: float = TEE_FAILURE_FRACTION,
    jobs: int | None = None,
) -> SweepResult:
    """Adaptive reconfiguration against an all-fallback random layout.

    Both arms run the same mid-run TEE failure plan covering ``fraction`` of
    the nodes; only the configuration policy differs.
    """
    tasks = [(n, derive_seed(base_seed, i), fraction) for i in range(seeds)]
    cells = _map_cells(
        _fallback_cell, tasks, jobs if jobs is not None else default_jobs()
    )
    return _aggregate("fallback_compare", "seed", cells)


def write_tables(result: SweepResult, out_dir: str | Path) -> list[Path]:
    """Write one CSV per system plus the raw per-cell table; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem in sorted(result.tables):
        rows = result.tables[stem]
        path = out / f"{stem}.csv"
        fields = list(rows[0].keys()) if rows else [result.axis_label]
        _write_csv(path, fields, rows)
        paths.append(path)
    cells_path = out / f"{result.name}_cells.csv"
    _write_csv(cells_path, list(_CELL_FIELDS), result.cells)
    paths.append(cells_path)
    return paths


def _write_csv(path: Path, fields: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
