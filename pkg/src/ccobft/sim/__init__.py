"""Discrete-event simulation of configured committees with fault injection."""
from .baselines import (
    closed_loop_throughput_ops,
    leader_based_latency_us,
    tee_assisted_latency_us,
    transmission_us,
)
from .compare import ComparisonRow, compare
from .events import Event, EventKind, EventQueue
from .random_config import random_configuration
from .report import SimReport, TxRecord
from .runner import run
from .workload import (
    Arrival,
    FaultPlan,
    Target,
    Workload,
    derive_seed,
    sample_fault_plan,
)

__all__ = [
    "closed_loop_throughput_ops",
    "leader_based_latency_us",
    "tee_assisted_latency_us",
    "transmission_us",
    "ComparisonRow",
    "compare",
    "Event",
    "EventKind",
    "EventQueue",
    "random_configuration",
    "SimReport",
    "TxRecord",
    "run",
    "Arrival",
    "FaultPlan",
    "Target",
    "Workload",
    "derive_seed",
    "sample_fault_plan",
]
