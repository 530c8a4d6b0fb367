"""Objective evaluation and constraint checking for committee configurations."""
from __future__ import annotations

from ..errors import InfeasibleConfigurationError
from ..model import Instance
from .config import Configuration, ConstraintId, LatencyBreakdown, Violation


def eligible_leaders(instance: Instance) -> list[int]:
    """Nodes reliable enough to lead: byzantine and crash rates within caps."""
    B = instance.params.byzantine_cap
    C = instance.params.crash_cap
    return [
        i
        for i, p in enumerate(instance.nodes)
        if p.byzantine_rate <= B and p.crash_rate <= C
    ]


def derive_fallback_flags(instance: Instance, leader_of: dict[int, int]) -> dict[int, bool]:
    """Minimal per-committee fallback flags: set iff any member's TEE failed.

    Minimal flags are optimal: activating fallback for a healthy committee
    only adds active links, and the bottleneck never improves with more links.
    """
    flags: dict[int, bool] = {}
    for node, leader in leader_of.items():
        if leader not in flags:
            flags[leader] = False
        if instance.nodes[node].tee_failed:
            flags[leader] = True
    return {l: flags[l] for l in flags if leader_of.get(l) == l}


def optimal_links(
    instance: Instance, leader_of: dict[int, int], flags: dict[int, bool]
) -> frozenset[tuple[int, int]]:
    """Cheapest valid active-link choice: per committee, the (2 + sigma) * f
    followers with the smallest round trips to the leader (ties to the lower
    node id)."""
    f = instance.params.f
    committees: dict[int, list[int]] = {}
    for node, leader in leader_of.items():
        if node != leader:
            committees.setdefault(leader, []).append(node)
    links: set[tuple[int, int]] = set()
    for leader in sorted(set(leader_of.values())):
        followers = committees.get(leader, [])
        k = (2 + (1 if flags.get(leader) else 0)) * f
        if len(followers) < k:
            raise InfeasibleConfigurationError(
                [
                    Violation(
                        ConstraintId.CONNECTION_COUNT,
                        leader,
                        f"{len(followers)} followers cannot supply {k} active links",
                    )
                ]
            )
        ranked = sorted(followers, key=lambda j: (instance.delays.rtt(leader, j), j))
        links.update((leader, j) for j in ranked[:k])
    return frozenset(links)


def check_constraints(instance: Instance, config: Configuration) -> list[Violation]:
    """All constraint violations of a configuration; empty means feasible."""
    out: list[Violation] = []
    f = instance.params.f
    n = instance.n
    leader_of = config.leader_of

    covered = set(leader_of)
    expected = set(range(n))
    for node in sorted(expected - covered):
        out.append(
            Violation(ConstraintId.UNIQUE_MEMBERSHIP, node, "node belongs to no committee")
        )
    for node in sorted(covered - expected):
        out.append(
            Violation(ConstraintId.UNIQUE_MEMBERSHIP, node, "unknown node in membership map")
        )

    leaders = sorted(i for i in covered & expected if leader_of[i] == i)
    if config.committee_count != len(leaders):
        out.append(
            Violation(
                ConstraintId.COMMITTEE_COUNT,
                config.committee_count,
                f"declared {config.committee_count} committees, found {len(leaders)} leaders",
            )
        )

    leader_set = set(leaders)
    for node in sorted(covered & expected):
        target = leader_of[node]
        if target not in leader_set:
            out.append(
                Violation(
                    ConstraintId.LEADER_SCOPE,
                    node,
                    f"assigned to {target}, which leads no committee",
                )
            )

    followers: dict[int, list[int]] = {l: [] for l in leaders}
    for node in sorted(covered & expected):
        target = leader_of[node]
        if node != target and target in followers:
            followers[target].append(node)

    for leader in leaders:
        if len(followers[leader]) < 3 * f:
            out.append(
                Violation(
                    ConstraintId.COMMITTEE_SIZE,
                    leader,
                    f"{len(followers[leader])} followers, need at least {3 * f}",
                )
            )
        prof = instance.nodes[leader]
        if prof.byzantine_rate > instance.params.byzantine_cap:
            out.append(
                Violation(
                    ConstraintId.LEADER_BYZANTINE,
                    leader,
                    f"byzantine rate {prof.byzantine_rate} exceeds cap "
                    f"{instance.params.byzantine_cap}",
                )
            )
        if prof.crash_rate > instance.params.crash_cap:
            out.append(
                Violation(
                    ConstraintId.LEADER_CRASH,
                    leader,
                    f"crash rate {prof.crash_rate} exceeds cap {instance.params.crash_cap}",
                )
            )

    for leader, follower in sorted(config.active_links):
        if leader not in leader_set:
            out.append(
                Violation(
                    ConstraintId.LINK_SCOPE, (leader, follower), "link source is not a leader"
                )
            )
        elif follower == leader or leader_of.get(follower) != leader:
            out.append(
                Violation(
                    ConstraintId.LINK_SCOPE,
                    (leader, follower),
                    "link target is not a follower of this committee",
                )
            )

    flag_keys = set(config.fallback_flags)
    for leader in sorted(flag_keys - leader_set):
        out.append(
            Violation(ConstraintId.SIGMA_CONSISTENCY, leader, "fallback flag for a non-leader")
        )
    for leader in leaders:
        sigma = bool(config.fallback_flags.get(leader, False))
        members = [leader] + followers[leader]
        if not sigma and any(instance.nodes[m].tee_failed for m in members):
            out.append(
                Violation(
                    ConstraintId.SIGMA_CONSISTENCY,
                    leader,
                    "committee contains a failed TEE but is not in fallback",
                )
            )
        have = sum(1 for (l, _) in config.active_links if l == leader)
        need = (2 + (1 if sigma else 0)) * f
        if have < need:
            out.append(
                Violation(
                    ConstraintId.CONNECTION_COUNT,
                    leader,
                    f"{have} active links, need at least {need}",
                )
            )
    return out


def evaluate(instance: Instance, config: Configuration) -> LatencyBreakdown:
    """Analytic round latency of a feasible configuration.

    Every phase term is a global maximum across committees, so the total is a
    sum of maxima rather than the worst per-committee sum.
    """
    violations = check_constraints(instance, config)
    if violations:
        raise InfeasibleConfigurationError(violations)

    worst_active = max(
        instance.delays.rtt(leader, follower)
        for leader, follower in config.active_links
    )
    leaders = config.leaders()
    t_cv = max(int(instance.delays.to_v[l]) for l in leaders)
    t_vc = max(int(instance.delays.from_v[l]) for l in leaders)
    return LatencyBreakdown(
        t_pre=2 * worst_active,
        t_cv=t_cv,
        t_ver=instance.verification.ordering_latency_us(),
        t_vc=t_vc,
        t_com=2 * worst_active,
    )
