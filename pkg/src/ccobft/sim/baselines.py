"""Closed-form single-committee baselines for trend comparison.

Two analytic reference models over the same delay matrix: a leader-based
protocol with three all-to-leader round trips, and a TEE-assisted one that
saves a round trip. Both keep every node in one committee, so their per-round
cost grows with the worst link and per-node processing grows with n. They are
trend references only, never simulated.
"""
from __future__ import annotations

import math

from ..cco.objective import eligible_leaders
from ..errors import InfeasibleInstanceError
from ..model import Instance


def _best_leader_worst_rtt(instance: Instance) -> int:
    """Worst leader<->node round trip under the best eligible leader."""
    rtts = instance.delays.rtt_matrix()
    candidates = eligible_leaders(instance)
    if not candidates:
        raise InfeasibleInstanceError("no node satisfies the leader rate caps")
    best = None
    for leader in candidates:
        worst = max(int(rtts[leader, j]) for j in range(instance.n) if j != leader)
        if best is None or worst < best:
            best = worst
    return int(best)


def transmission_us(payload_bytes: int, bandwidth_bps: float) -> int:
    if payload_bytes <= 0:
        return 0
    return math.ceil(payload_bytes * 8 * 1_000_000 / bandwidth_bps)


# Per-message handling cost at the leader (serialization, signature checks).
# Without it an O(n) protocol would look free at payload zero.
DEFAULT_PER_MESSAGE_US = 50


def leader_based_latency_us(
    instance: Instance,
    payload_bytes: int = 0,
    bandwidth_bps: float = 1e9,
    per_message_us: int = DEFAULT_PER_MESSAGE_US,
) -> int:
    """Single committee, three round trips, payload relayed to every node."""
    rtt = _best_leader_worst_rtt(instance)
    per_node = per_message_us + transmission_us(payload_bytes, bandwidth_bps)
    return 3 * rtt + 3 * instance.n * per_node


def tee_assisted_latency_us(
    instance: Instance,
    payload_bytes: int = 0,
    bandwidth_bps: float = 1e9,
    per_message_us: int = DEFAULT_PER_MESSAGE_US,
) -> int:
    """Single committee with trusted counters: one round trip fewer."""
    rtt = _best_leader_worst_rtt(instance)
    per_node = per_message_us + transmission_us(payload_bytes, bandwidth_bps)
    return 2 * rtt + 2 * instance.n * per_node


def closed_loop_throughput_ops(latency_us: int) -> float:
    """One outstanding request: throughput is the reciprocal of latency."""
    if latency_us <= 0:
        return 0.0
    return 1_000_000 / latency_us
