"""Exact committee configuration search.

Branch and bound over (committee count, leader set): leader sets are
enumerated in deterministic order and pruned with admissible bounds; the
follower assignment under each leader set is solved to optimality by binary
search on the bottleneck round trip, with a degree-constrained bipartite
feasibility check (lower-bounded max flow) at each threshold.
"""
from __future__ import annotations

import itertools
import time

import numpy as np

from ..errors import InfeasibleInstanceError, SolveTimeoutError
from ..model import Instance, validate_instance
from .config import Configuration, SolveLimits, SolveResult
from .flow import BoundedFlow
from .heuristic import solve_heuristic
from .objective import derive_fallback_flags, eligible_leaders, evaluate, optimal_links


def global_lower_bound(instance: Instance) -> int:
    """Cheap instance-wide lower bound on t_tr, valid for any configuration."""
    eligible = eligible_leaders(instance)
    if not eligible:
        return 0
    R = instance.delays.rtt_matrix()
    k = 2 * instance.params.f
    best_bottleneck = None
    for l in eligible:
        others = np.delete(R[l], l)
        if others.shape[0] < k:
            continue
        kth = int(np.partition(others, k - 1)[k - 1])
        best_bottleneck = kth if best_bottleneck is None else min(best_bottleneck, kth)
    if best_bottleneck is None:
        return 0
    t_cv = min(int(instance.delays.to_v[l]) for l in eligible)
    t_vc = min(int(instance.delays.from_v[l]) for l in eligible)
    return 4 * best_bottleneck + t_cv + t_vc + instance.verification.ordering_latency_us()


def _assignment_feasible(R, tee, leaders, in_fallback, f, tau, n):
    """Can all followers be assigned so that every committee gets 3f of them
    and (2 + sigma) * f within round trip tau? Returns the assignment map or
    None.

    Followers with failed TEEs may only join committees already counted as
    fallback; membership itself is unconstrained by tau, only the active
    quota is.
    """
    p = len(leaders)
    leader_set = set(leaders)
    followers = [j for j in range(n) if j not in leader_set]
    m = len(followers)
    # Node layout: S, T, followers, cheap-per-committee, total-per-committee.
    S, T = 0, 1
    fnode = {j: 2 + idx for idx, j in enumerate(followers)}
    cheap0 = 2 + m
    total0 = 2 + m + p

    bf = BoundedFlow(2 + m + 2 * p)
    choice_arcs: list[tuple[int, int, int]] = []
    for j in followers:
        bf.add_edge(S, fnode[j], 1, 1)
        for c, l in enumerate(leaders):
            if tee[j] and c not in in_fallback:
                continue
            if R[l][j] <= tau:
                h = bf.add_edge(fnode[j], cheap0 + c, 0, 1)
                choice_arcs.append((h, j, c))
            h = bf.add_edge(fnode[j], total0 + c, 0, 1)
            choice_arcs.append((h, j, c))
    for c in range(p):
        quota = (2 + (1 if c in in_fallback else 0)) * f
        bf.add_edge(cheap0 + c, total0 + c, quota, m)
        bf.add_edge(total0 + c, T, 3 * f, m)
    bf.add_edge(T, S, 0, m)

    if not bf.feasible():
        return None
    assign = {}
    for handle, j, c in choice_arcs:
        if bf.flow_on(handle) > 0:
            assign[j] = c
    return assign


def _fallback_guesses(leaders, tee, n):
    """Candidate fallback-committee sets: forced ones (failed-TEE leader) plus
    up to one optional committee per failed follower."""
    leader_set = set(leaders)
    forced = frozenset(c for c, l in enumerate(leaders) if tee[l])
    optional = [c for c, l in enumerate(leaders) if not tee[l]]
    failed_followers = sum(1 for j in range(n) if tee[j] and j not in leader_set)
    max_extra = min(len(optional), failed_followers)
    for r in range(max_extra + 1):
        for extra in itertools.combinations(optional, r):
            yield forced | frozenset(extra)


def _best_assignment_for_leaders(instance, R, tee, leaders, incumbent_total, lt_terms):
    """Optimal membership under a fixed leader set, or None.

    Minimizes the bottleneck by binary search over realized round-trip values,
    separately for each consistent guess of which committees run in fallback.
    """
    n = instance.n
    f = instance.params.f
    best = None
    leader_set = set(leaders)
    candidate_rtts = sorted(
        {int(R[l][j]) for l in leaders for j in range(n) if j not in leader_set}
    )
    for in_fallback in _fallback_guesses(leaders, tee, n):
        lo, hi = 0, len(candidate_rtts) - 1
        if (
            _assignment_feasible(R, tee, leaders, in_fallback, f, candidate_rtts[hi], n)
            is None
        ):
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if (
                _assignment_feasible(
                    R, tee, leaders, in_fallback, f, candidate_rtts[mid], n
                )
                is not None
            ):
                hi = mid
            else:
                lo = mid + 1
        tau = candidate_rtts[lo]
        if lt_terms + 4 * tau >= incumbent_total and best is not None:
            continue
        assign = _assignment_feasible(R, tee, leaders, in_fallback, f, tau, n)
        leader_of = {l: l for l in leaders}
        for j, c in assign.items():
            leader_of[j] = leaders[c]
        flags = derive_fallback_flags(instance, leader_of)
        links = optimal_links(instance, leader_of, flags)
        config = Configuration(
            leader_of=leader_of,
            active_links=links,
            fallback_flags=flags,
            committee_count=len(leaders),
        )
        latency = evaluate(instance, config)
        if best is None or latency.t_tr < best[1].t_tr:
            best = (config, latency)
    return best


def solve_exact(instance: Instance, limits: SolveLimits | None = None) -> SolveResult:
    """Provably optimal configuration within the node cap; deterministic."""
    limits = limits or SolveLimits()
    problems = validate_instance(instance)
    if problems:
        raise InfeasibleInstanceError("; ".join(problems))
    if instance.n > limits.node_cap_exact:
        raise ValueError(
            f"{instance.n} nodes exceed the exact-solver cap of "
            f"{limits.node_cap_exact}; use solve_heuristic"
        )
    eligible = eligible_leaders(instance)
    if not eligible:
        raise InfeasibleInstanceError("no node satisfies the leader reliability caps")
    p_max = instance.max_committees
    if p_max < 1:
        raise InfeasibleInstanceError(
            f"{instance.n} nodes cannot host a committee of {instance.min_committee_size}"
        )

    n = instance.n
    f = instance.params.f
    tee = [p.tee_failed for p in instance.nodes]
    Rm = instance.delays.rtt_matrix()
    R = [[int(x) for x in row] for row in Rm]
    to_v = [int(x) for x in instance.delays.to_v]
    from_v = [int(x) for x in instance.delays.from_v]
    t_ver = instance.verification.ordering_latency_us()

    # Heuristic warm start gives the pruning an incumbent to push against.
    incumbent = None
    try:
        warm = solve_heuristic(instance, seed=0, iteration_budget=800)
        incumbent = (warm.config, warm.latency)
    except InfeasibleInstanceError:
        pass

    # Admissible per-leader bottleneck bound: the 2f-th cheapest round trip to
    # anything is never worse than to the committee actually assigned.
    bottleneck_lb = {}
    for l in eligible:
        others = sorted(R[l][j] for j in range(n) if j != l)
        bottleneck_lb[l] = others[2 * f - 1] if len(others) >= 2 * f else 0

    deadline = time.monotonic() + limits.time_budget
    complete = True
    explored = pruned = 0
    for p in range(1, p_max + 1):
        if len(eligible) < p:
            break
        for leaders in itertools.combinations(eligible, p):
            if time.monotonic() > deadline:
                complete = False
                break
            lt_terms = (
                max(to_v[l] for l in leaders)
                + max(from_v[l] for l in leaders)
                + t_ver
            )
            inc_total = incumbent[1].t_tr if incumbent else None
            if inc_total is not None:
                lb = lt_terms + 4 * max(bottleneck_lb[l] for l in leaders)
                if lb >= inc_total:
                    pruned += 1
                    continue
            explored += 1
            found = _best_assignment_for_leaders(
                instance, R, tee, leaders, inc_total if inc_total else 1 << 62, lt_terms
            )
            if found and (incumbent is None or found[1].t_tr < incumbent[1].t_tr):
                incumbent = found
        if not complete:
            break

    if incumbent is None:
        if not complete:
            raise SolveTimeoutError("time budget exhausted before finding any configuration")
        raise InfeasibleInstanceError("no feasible configuration exists")
    if not complete and limits.optimality_required:
        raise SolveTimeoutError("time budget exhausted before proving optimality")

    config, latency = incumbent
    gap = 0.0
    if not complete:
        lb = global_lower_bound(instance)
        gap = max(0.0, (latency.t_tr - lb) / latency.t_tr) if latency.t_tr else 0.0
    return SolveResult(
        config=config,
        latency=latency,
        optimal=complete,
        gap=gap,
        method="exact",
        stats={"leader_sets_explored": explored, "leader_sets_pruned": pruned},
    )
