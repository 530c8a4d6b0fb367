"""Greedy seeding plus local search for large instances.

Seeding is a capacity-aware farthest-point sweep: each new leader immediately
reserves its 3f nearest free followers. Plain farthest-point seeding piles
leaders onto whichever region has the lowest node ids once every region
already holds one, and the resulting cross-region committees leave local
search stuck on a flat bottleneck plateau; reservation avoids that without
randomness.
"""
from __future__ import annotations

import random

import numpy as np

from ..errors import InfeasibleInstanceError
from ..model import Instance, validate_instance
from .. import kernels
from .config import Configuration, SolveResult
from .objective import derive_fallback_flags, eligible_leaders, evaluate, optimal_links


def _seed_partition(instance: Instance, eligible: list[int]) -> tuple[list[int], np.ndarray]:
    n = instance.n
    f = instance.params.f
    R = instance.delays.rtt_matrix()
    p_target = instance.max_committees

    owner = np.full(n, -1, dtype=np.int64)
    leaders: list[int] = []

    def reserve(leader: int) -> None:
        c = len(leaders)
        leaders.append(leader)
        owner[leader] = c
        free = [j for j in range(n) if owner[j] < 0]
        free.sort(key=lambda j: (int(R[leader, j]), j))
        for j in free[: 3 * f]:
            owner[j] = c

    to_v, from_v = instance.delays.to_v, instance.delays.from_v
    first = min(eligible, key=lambda l: (int(to_v[l]) + int(from_v[l]), l))
    reserve(first)
    while len(leaders) < p_target:
        candidates = [l for l in eligible if owner[l] < 0]
        if not candidates:
            break
        best = max(
            candidates,
            key=lambda cand: (min(int(R[l, cand]) for l in leaders), -cand),
        )
        reserve(best)

    # Leftovers ride with whichever leader is closest.
    for j in range(n):
        if owner[j] < 0:
            owner[j] = min(
                range(len(leaders)), key=lambda c: (int(R[leaders[c], j]), c)
            )
    return leaders, owner


def solve_heuristic(
    instance: Instance,
    seed: int = 0,
    iteration_budget: int = 4000,
) -> SolveResult:
    """Feasible configuration in polynomial time; deterministic per seed."""
    problems = validate_instance(instance)
    if problems:
        raise InfeasibleInstanceError("; ".join(problems))
    eligible = eligible_leaders(instance)
    if not eligible:
        raise InfeasibleInstanceError("no node satisfies the leader reliability caps")
    if instance.max_committees < 1:
        raise InfeasibleInstanceError(
            f"{instance.n} nodes cannot host a committee of {instance.min_committee_size}"
        )

    n = instance.n
    f = instance.params.f
    R = np.ascontiguousarray(instance.delays.rtt_matrix())
    to_v = np.ascontiguousarray(instance.delays.to_v)
    from_v = np.ascontiguousarray(instance.delays.from_v)
    tee = np.ascontiguousarray(instance.tee_flags())
    t_ver = instance.verification.ordering_latency_us()
    eligible_set = set(eligible)

    leader_list, assign = _seed_partition(instance, eligible)
    leaders = np.array(leader_list, dtype=np.int64)
    p = len(leader_list)
    sizes = np.bincount(assign, minlength=p)

    def total(l_arr, a_arr) -> int:
        bottleneck, tv, fv = kernels.objective_components(
            R, to_v, from_v, tee, l_arr, a_arr, f
        )
        return 4 * bottleneck + tv + fv + t_ver

    current = total(leaders, assign)
    rng = random.Random(seed)
    min_size = 3 * f + 1
    stall_limit = max(300, 4 * n)
    stalled = 0
    node_ids = list(range(n))

    for _ in range(iteration_budget):
        if stalled >= stall_limit or p < 2:
            break
        kind = rng.random()
        if kind < 0.45:
            # Move one follower to another committee.
            j = rng.choice(node_ids)
            src = int(assign[j])
            if leaders[src] == j or sizes[src] <= min_size:
                stalled += 1
                continue
            dst = rng.randrange(p - 1)
            if dst >= src:
                dst += 1
            assign[j] = dst
            sizes[src] -= 1
            sizes[dst] += 1
            cand = total(leaders, assign)
            if cand < current:
                current = cand
                stalled = 0
            else:
                assign[j] = src
                sizes[src] += 1
                sizes[dst] -= 1
                stalled += 1
        elif kind < 0.8:
            # Swap two followers between committees.
            j1 = rng.choice(node_ids)
            j2 = rng.choice(node_ids)
            c1, c2 = int(assign[j1]), int(assign[j2])
            if c1 == c2 or leaders[c1] == j1 or leaders[c2] == j2:
                stalled += 1
                continue
            assign[j1], assign[j2] = c2, c1
            cand = total(leaders, assign)
            if cand < current:
                current = cand
                stalled = 0
            else:
                assign[j1], assign[j2] = c1, c2
                stalled += 1
        else:
            # Hand leadership to an eligible member of the same committee.
            c = rng.randrange(p)
            members = np.nonzero(assign == c)[0]
            options = [int(m) for m in members if m != leaders[c] and int(m) in eligible_set]
            if not options:
                stalled += 1
                continue
            m = rng.choice(options)
            old = int(leaders[c])
            leaders[c] = m
            cand = total(leaders, assign)
            if cand < current:
                current = cand
                stalled = 0
            else:
                leaders[c] = old
                stalled += 1

    leader_of = {j: int(leaders[assign[j]]) for j in range(n)}
    flags = derive_fallback_flags(instance, leader_of)
    links = optimal_links(instance, leader_of, flags)
    config = Configuration(
        leader_of=leader_of,
        active_links=links,
        fallback_flags=flags,
        committee_count=p,
    )
    latency = evaluate(instance, config)
    from .exact import global_lower_bound

    lb = global_lower_bound(instance)
    gap = max(0.0, (latency.t_tr - lb) / latency.t_tr) if latency.t_tr else 0.0
    return SolveResult(
        config=config,
        latency=latency,
        optimal=False,
        gap=gap,
        method="heuristic",
        stats={"objective": current, "committees": p},
    )
