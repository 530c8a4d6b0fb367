"""Exhaustive enumeration oracle for small instances.

Computes the objective through its own direct code path (sorted follower
round-trip lists, explicit maxima) so that comparisons against solve_exact
exercise two independent routes to the same number.
"""
from __future__ import annotations

import itertools

from ..errors import InfeasibleInstanceError
from ..model import Instance, validate_instance
from .config import Configuration, LatencyBreakdown, SolveResult

_NODE_LIMIT = 10


def _partitions(items: list[int], min_size: int):
    """All unordered partitions into blocks of at least min_size, each once."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for size in range(min_size, len(items) + 1):
        leftover = len(items) - size
        if leftover != 0 and leftover < min_size:
            continue
        for others in itertools.combinations(rest, size - 1):
            taken = set(others)
            remaining = [x for x in rest if x not in taken]
            block = (first,) + others
            for tail in _partitions(remaining, min_size):
                yield [block] + tail


def brute_force(instance: Instance) -> SolveResult:
    problems = validate_instance(instance)
    if problems:
        raise InfeasibleInstanceError("; ".join(problems))
    if instance.n > _NODE_LIMIT:
        raise ValueError(
            f"exhaustive enumeration is limited to {_NODE_LIMIT} nodes, got {instance.n}"
        )

    n = instance.n
    f = instance.params.f
    B = instance.params.byzantine_cap
    C = instance.params.crash_cap
    tee = [p.tee_failed for p in instance.nodes]
    R = [
        [int(instance.delays.d[i, j]) + int(instance.delays.d[j, i]) for j in range(n)]
        for i in range(n)
    ]
    to_v = [int(x) for x in instance.delays.to_v]
    from_v = [int(x) for x in instance.delays.from_v]
    t_ver = instance.verification.ordering_latency_us()
    can_lead = [
        instance.nodes[i].byzantine_rate <= B and instance.nodes[i].crash_rate <= C
        for i in range(n)
    ]

    best = None
    for partition in _partitions(list(range(n)), 3 * f + 1):
        leader_pools = [[m for m in block if can_lead[m]] for block in partition]
        if any(not pool for pool in leader_pools):
            continue
        for combo in itertools.product(*leader_pools):
            worst_active = 0
            worst_tv = 0
            worst_fv = 0
            for block, leader in zip(partition, combo):
                sigma = 1 if any(tee[m] for m in block) else 0
                k = (2 + sigma) * f
                frtts = sorted(R[leader][j] for j in block if j != leader)
                if frtts[k - 1] > worst_active:
                    worst_active = frtts[k - 1]
                worst_tv = max(worst_tv, to_v[leader])
                worst_fv = max(worst_fv, from_v[leader])
            total = 4 * worst_active + worst_tv + worst_fv + t_ver
            if best is None or total < best[0]:
                best = (total, partition, combo, worst_active, worst_tv, worst_fv)

    if best is None:
        raise InfeasibleInstanceError("no feasible configuration exists")

    total, partition, combo, worst_active, worst_tv, worst_fv = best
    leader_of: dict[int, int] = {}
    flags: dict[int, bool] = {}
    links: set[tuple[int, int]] = set()
    for block, leader in zip(partition, combo):
        sigma = 1 if any(tee[m] for m in block) else 0
        k = (2 + sigma) * f
        for m in block:
            leader_of[m] = leader
        flags[leader] = bool(sigma)
        ranked = sorted((j for j in block if j != leader), key=lambda j: (R[leader][j], j))
        links.update((leader, j) for j in ranked[:k])
    config = Configuration(
        leader_of=leader_of,
        active_links=frozenset(links),
        fallback_flags=flags,
        committee_count=len(partition),
    )
    latency = LatencyBreakdown(
        t_pre=2 * worst_active,
        t_cv=worst_tv,
        t_ver=t_ver,
        t_vc=worst_fv,
        t_com=2 * worst_active,
    )
    return SolveResult(
        config=config, latency=latency, optimal=True, gap=0.0, method="brute-force"
    )
