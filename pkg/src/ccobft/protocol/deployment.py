"""Instantiate per-node state machines from a solved configuration."""
from __future__ import annotations

from ..cco.config import Configuration
from ..model import Instance
from .counter import AttestationAuthority
from .messages import Address, consensus, verification
from .node import Mode, NodeState, Role


def assemble(
    instance: Instance,
    config: Configuration,
    authority_seed: int = 0,
    hold_after_order: bool = False,
) -> dict[Address, NodeState]:
    """Build the full node population for one deployment.

    Counters for committees already flagged as fallback are still issued;
    their attestations are simply never requested.
    """
    authority = AttestationAuthority(master_seed=authority_seed)
    f = instance.params.f
    states: dict[Address, NodeState] = {}
    committees = config.committees()
    active = config.active_by_leader()
    v_leader_index = instance.verification.leader_index
    v_leader = verification(v_leader_index)

    for leader, followers in committees.items():
        mode = Mode.FALLBACK if config.fallback_flags.get(leader, False) else Mode.NORMAL
        states[consensus(leader)] = NodeState(
            address=consensus(leader),
            role=Role.CONSENSUS_LEADER,
            committee=leader,
            f=f,
            mode=mode,
            counter=authority.issue(leader),
            authority=authority,
            v_leader=v_leader,
            followers=tuple(consensus(j) for j in followers),
            active=tuple(consensus(j) for j in active[leader]),
        )
        active_set = set(active[leader])
        for follower in followers:
            role = Role.ACTIVE_FOLLOWER if follower in active_set else Role.PASSIVE_FOLLOWER
            states[consensus(follower)] = NodeState(
                address=consensus(follower),
                role=role,
                committee=leader,
                f=f,
                mode=mode,
                authority=authority,
            )

    members = tuple(
        verification(i)
        for i in instance.verification.member_indices()
        if i != v_leader_index
    )
    states[v_leader] = NodeState(
        address=v_leader,
        role=Role.VERIFICATION_LEADER,
        committee=-1,
        f=f,
        authority=authority,
        members=members,
        participants=set(committees),
        min_quorum=2 * f + 1,
        hold_after_order=hold_after_order,
    )
    for member in members:
        states[member] = NodeState(
            address=member,
            role=Role.VERIFICATION_FOLLOWER,
            committee=-1,
            f=f,
            authority=authority,
        )
    return states
