"""Workload shapes, fault plans, and seed derivation for sweeps."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

from ..model import Instance

# Python's builtin hash is salted per process; sweeps need stable streams.
_SEED_STRIDE = 1_000_003


def derive_seed(base_seed: int, index: int) -> int:
    return (base_seed * _SEED_STRIDE + index) % 2**63


class Arrival(Enum):
    CLOSED_LOOP = "closed-loop"
    POISSON = "poisson"


class Target(Enum):
    ROUND_ROBIN = "round-robin"
    PINNED = "pinned"


@dataclass(frozen=True)
class Workload:
    """What the clients do.

    Closed-loop keeps one request outstanding per committee and launches the
    next group the moment the whole group has replied. Poisson arrivals are
    open-loop at rate_per_s, aimed round-robin or pinned to one committee.
    """

    total_requests: int
    arrival: Arrival = Arrival.CLOSED_LOOP
    rate_per_s: float = 0.0
    payload_bytes: int = 0
    target: Target = Target.ROUND_ROBIN
    pinned_committee: int = 0

    def validate(self) -> None:
        if self.total_requests <= 0:
            raise ValueError("total_requests must be positive")
        if self.payload_bytes < 0:
            raise ValueError("payload_bytes must be non-negative")
        if self.arrival is Arrival.POISSON and self.rate_per_s <= 0:
            raise ValueError("poisson arrivals need a positive rate")


MAX_FAULTY_FRACTION = 0.3


@dataclass(frozen=True)
class FaultPlan:
    """Scheduled faults: delay multipliers, crash times, TEE failure times.

    At most 30% of the nodes may be faulty in any run; plans over the cap are
    rejected, and the sampler truncates keeping the lowest node ids.
    """

    slow: dict[int, float] = field(default_factory=dict)
    crashes: dict[int, int] = field(default_factory=dict)
    tee_failures: dict[int, int] = field(default_factory=dict)

    def faulty_nodes(self) -> set[int]:
        return set(self.slow) | set(self.crashes) | set(self.tee_failures)

    def validate(self, n: int) -> None:
        faulty = self.faulty_nodes()
        cap = math.floor(MAX_FAULTY_FRACTION * n)
        if len(faulty) > cap:
            raise ValueError(
                f"{len(faulty)} faulty nodes exceed the cap of {cap} (30% of {n})"
            )
        out_of_range = [i for i in faulty if not 0 <= i < n]
        if out_of_range:
            raise ValueError(f"fault plan names unknown nodes {sorted(out_of_range)}")


def sample_fault_plan(
    instance: Instance,
    seed: int,
    crash_at_us: int = 0,
    tee_at_us: int = 0,
    slow_multiplier: float = 4.0,
) -> FaultPlan:
    """Draw a fault plan from the per-node rates.

    A node crashes with probability crash_rate and runs slow with probability
    byzantine_rate; nodes whose TEE is marked failed get a failure event.
    Everything past the 30% cap is dropped, highest node ids first.
    """
    rng = random.Random(seed)
    slow: dict[int, float] = {}
    crashes: dict[int, int] = {}
    tee: dict[int, int] = {}
    for i, profile in enumerate(instance.nodes):
        if rng.random() < profile.crash_rate:
            crashes[i] = crash_at_us
        elif rng.random() < profile.byzantine_rate:
            slow[i] = slow_multiplier
        if profile.tee_failed:
            tee[i] = tee_at_us
    cap = math.floor(MAX_FAULTY_FRACTION * instance.n)
    faulty = sorted(set(slow) | set(crashes) | set(tee))
    for i in faulty[cap:]:
        slow.pop(i, None)
        crashes.pop(i, None)
        tee.pop(i, None)
    plan = FaultPlan(slow=slow, crashes=crashes, tee_failures=tee)
    plan.validate(instance.n)
    return plan
