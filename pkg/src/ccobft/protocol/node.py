"""Per-node protocol state machines.

Every node is a :class:`NodeState` plus the pure-ish transition function
:func:`handle_message`. The transition mutates the state in place and returns
it together with an outbox of (destination, message) pairs; delivery timing,
timeouts, and fault injection live in the simulator, not here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .counter import AttestationAuthority, TrustedCounter
from .messages import (
    CLIENT,
    Address,
    Block,
    MessageKind,
    MultiSignature,
    ProtocolMessage,
    Stage,
    consensus,
    request_digest,
)
from .ordering import total_order

Outbox = list[tuple[Address, ProtocolMessage]]


class Role(Enum):
    CONSENSUS_LEADER = "consensus-leader"
    ACTIVE_FOLLOWER = "active-follower"
    PASSIVE_FOLLOWER = "passive-follower"
    VERIFICATION_LEADER = "verification-leader"
    VERIFICATION_FOLLOWER = "verification-follower"


class Mode(Enum):
    NORMAL = "normal"
    FALLBACK = "fallback"


@dataclass
class PendingEntry:
    """Leader-side progress record for one assigned sequence number.

    participants is the active set frozen when the sequence was assigned; the
    exchange completes with exactly those followers even if the committee
    switches modes mid-flight, so quorum bookkeeping never shifts under an
    in-progress round.
    """

    request_id: int
    round_id: int
    payload_size: int
    digest: str
    participants: tuple[Address, ...]
    stage: Stage = Stage.PREPARE
    leg: int = 1
    awaiting_notice: bool = False
    acks: set[Address] = field(default_factory=set)


@dataclass
class OrderingRound:
    """Verification-leader progress through the four internal exchanges."""

    round_id: int
    entries: list[ProtocolMessage]
    vround: int = 1
    acks: set[Address] = field(default_factory=set)
    # Filled before the fourth exchange so members see the proposed block.
    block: Block | None = None
    reports: list[str] = field(default_factory=list)


@dataclass
class NodeState:
    address: Address
    role: Role
    committee: int  # committee leader node id; -1 for the verification side
    f: int
    mode: Mode = Mode.NORMAL
    counter: TrustedCounter | None = None
    authority: AttestationAuthority | None = None
    v_leader: Address | None = None
    followers: tuple[Address, ...] = ()
    active: tuple[Address, ...] = ()
    log: dict[int, str] = field(default_factory=dict)
    blocks: list[Block] = field(default_factory=list)
    # (counter node, counter value) -> digest; a second digest is equivocation.
    bindings: dict[tuple[int, int], str] = field(default_factory=dict)
    pending: dict[int, PendingEntry] = field(default_factory=dict)
    buffered: dict[int, list[ProtocolMessage]] = field(default_factory=dict)
    next_seq: int = 0
    committed: list[tuple[int, str]] = field(default_factory=list)
    executed: int = 0
    alarms: list[str] = field(default_factory=list)
    # Verification leader only.
    members: tuple[Address, ...] = ()
    participants: set[int] = field(default_factory=set)
    expected: dict[int, int] = field(default_factory=dict)
    min_quorum: int = 0
    vbuffer: dict[int, list[ProtocolMessage]] = field(default_factory=dict)
    vqueue: list[int] = field(default_factory=list)
    vcurrent: OrderingRound | None = None
    height: int = 0
    hold_after_order: bool = False
    held: bool = False


def handle_message(
    state: NodeState, msg: ProtocolMessage, now: int
) -> tuple[NodeState, Outbox]:
    """Apply one inbound message and return the messages it provokes."""
    if state.role is Role.CONSENSUS_LEADER:
        if msg.kind is MessageKind.REQUEST:
            return state, _leader_request(state, msg, now)
        if msg.kind is MessageKind.PREPARE:
            return state, _leader_prepare_ack(state, msg)
        if msg.kind is MessageKind.COMMIT_NOTICE:
            return state, _leader_commit_notice(state, msg, now)
    elif state.role in (Role.ACTIVE_FOLLOWER, Role.PASSIVE_FOLLOWER):
        if msg.kind is MessageKind.PRE_PREPARE:
            return state, _follower_pre_prepare(state, msg, now)
        if msg.kind is MessageKind.COMMIT_NOTICE:
            return state, _follower_commit_leg(state, msg, now)
        if msg.kind is MessageKind.FALLBACK_ACTIVATE:
            state.mode = Mode.FALLBACK
            if state.role is Role.PASSIVE_FOLLOWER:
                state.role = Role.ACTIVE_FOLLOWER
            return state, []
    elif state.role is Role.VERIFICATION_LEADER:
        if msg.kind is MessageKind.AGGREGATE_PREPARED:
            return state, _vleader_aggregate(state, msg)
        if msg.kind is MessageKind.PREPARE and msg.committee == -1:
            return state, _vleader_exchange_ack(state, msg, now)
    elif state.role is Role.VERIFICATION_FOLLOWER:
        if msg.kind is MessageKind.PRE_PREPARE and msg.committee == -1:
            if msg.block is not None:
                state.blocks.append(msg.block)
            reply = ProtocolMessage(
                kind=MessageKind.PREPARE,
                committee=-1,
                sequence=msg.sequence,
                sender=state.address,
                vround=msg.vround,
                round_id=msg.round_id,
            )
            return state, [(msg.sender, reply)]
    return state, []


# -- consensus leader ---------------------------------------------------------


def _leader_request(state: NodeState, msg: ProtocolMessage, now: int) -> Outbox:
    digest = request_digest(msg.request_id, msg.payload_size)
    attestation = None
    if state.mode is Mode.NORMAL:
        if state.counter is None:
            raise ValueError(f"leader {state.address} has no counter in normal mode")
        attestation = state.counter.assign(digest)
        seq = attestation.value
        state.next_seq = seq
    else:
        state.next_seq += 1
        seq = state.next_seq
    state.log[seq] = digest
    state.pending[seq] = PendingEntry(
        request_id=msg.request_id,
        round_id=msg.round_id,
        payload_size=msg.payload_size,
        digest=digest,
        participants=state.active,
    )
    out: Outbox = []
    for follower in state.active:
        out.append(
            (
                follower,
                ProtocolMessage(
                    kind=MessageKind.PRE_PREPARE,
                    committee=state.committee,
                    sequence=seq,
                    sender=state.address,
                    stage=Stage.PREPARE,
                    leg=1,
                    payload_size=msg.payload_size,
                    digest=digest,
                    attestation=attestation,
                    request_id=msg.request_id,
                    round_id=msg.round_id,
                ),
            )
        )
    return out


def _leader_prepare_ack(state: NodeState, msg: ProtocolMessage) -> Outbox:
    entry = state.pending.get(msg.sequence)
    if entry is None or msg.sender not in entry.participants:
        return []
    if entry.stage is not msg.stage or entry.leg != msg.leg or entry.awaiting_notice:
        return []
    entry.acks.add(msg.sender)
    if len(entry.acks) < len(entry.participants):
        return []
    entry.acks = set()
    if entry.stage is Stage.PREPARE:
        if entry.leg == 1:
            entry.leg = 2
            return _leader_broadcast(state, entry, msg.sequence, MessageKind.PRE_PREPARE)
        entry.awaiting_notice = True
        signers = frozenset(entry.participants) | {state.address}
        signature = MultiSignature(
            digest=entry.digest, signers=signers, threshold=len(signers)
        )
        aggregate = ProtocolMessage(
            kind=MessageKind.AGGREGATE_PREPARED,
            committee=state.committee,
            sequence=msg.sequence,
            sender=state.address,
            payload_size=entry.payload_size,
            digest=entry.digest,
            signatures=signature,
            request_id=entry.request_id,
            round_id=entry.round_id,
        )
        if state.v_leader is None:
            raise ValueError(f"leader {state.address} has no verification leader")
        return [(state.v_leader, aggregate)]
    if entry.leg == 1:
        entry.leg = 2
        return _leader_broadcast(state, entry, msg.sequence, MessageKind.COMMIT_NOTICE)
    state.committed.append((msg.sequence, entry.digest))
    state.executed += 1
    del state.pending[msg.sequence]
    reply = ProtocolMessage(
        kind=MessageKind.REPLY,
        committee=state.committee,
        sequence=msg.sequence,
        sender=state.address,
        digest=entry.digest,
        request_id=entry.request_id,
        round_id=entry.round_id,
    )
    return [(CLIENT, reply)]


def _leader_commit_notice(state: NodeState, msg: ProtocolMessage, now: int) -> Outbox:
    entry = state.pending.get(msg.sequence)
    if entry is None or not entry.awaiting_notice:
        return []
    block = msg.block
    if block is None or block.signature is None or not block.signature.verify(block.digest()):
        state.alarms.append(
            f"[{now}] {state.address}: commit notice for seq {msg.sequence} "
            "carries an unverifiable block"
        )
        return []
    if (state.committee, msg.sequence, entry.digest) not in block.entries:
        state.alarms.append(
            f"[{now}] {state.address}: block at height {block.height} omits "
            f"seq {msg.sequence}"
        )
        return []
    entry.awaiting_notice = False
    entry.stage = Stage.COMMIT
    entry.leg = 1
    entry.acks = set()
    return _leader_broadcast(state, entry, msg.sequence, MessageKind.COMMIT_NOTICE)


def _leader_broadcast(
    state: NodeState, entry: PendingEntry, seq: int, kind: MessageKind
) -> Outbox:
    out: Outbox = []
    for follower in entry.participants:
        out.append(
            (
                follower,
                ProtocolMessage(
                    kind=kind,
                    committee=state.committee,
                    sequence=seq,
                    sender=state.address,
                    stage=entry.stage,
                    leg=entry.leg,
                    digest=entry.digest,
                    request_id=entry.request_id,
                    round_id=entry.round_id,
                ),
            )
        )
    return out


# -- committee followers ------------------------------------------------------


def _follower_pre_prepare(state: NodeState, msg: ProtocolMessage, now: int) -> Outbox:
    if msg.leg == 1:
        if state.mode is Mode.NORMAL:
            att = msg.attestation
            if att is None or state.authority is None or not state.authority.verify(att):
                state.alarms.append(
                    f"[{now}] {state.address}: rejected seq {msg.sequence} "
                    "with missing or invalid attestation"
                )
                return []
            key = (att.node, att.value)
            bound = state.bindings.get(key)
            if bound is not None and bound != msg.digest:
                state.alarms.append(
                    f"[{now}] {state.address}: counter {key} already bound; "
                    f"equivocation by {msg.sender}"
                )
                return []
            state.bindings[key] = msg.digest
        logged = state.log.get(msg.sequence)
        if logged is not None and logged != msg.digest:
            state.alarms.append(
                f"[{now}] {state.address}: seq {msg.sequence} already holds a "
                "different digest; rebind refused"
            )
            return []
        state.log[msg.sequence] = msg.digest
        out = [_follower_ack(state, msg)]
        for held in state.buffered.pop(msg.sequence, []):
            _, extra = handle_message(state, held, now)
            out.extend(extra)
        return out
    if msg.sequence not in state.log:
        state.buffered.setdefault(msg.sequence, []).append(msg)
        return []
    return [_follower_ack(state, msg)]


def _follower_commit_leg(state: NodeState, msg: ProtocolMessage, now: int) -> Outbox:
    if msg.sequence not in state.log:
        state.buffered.setdefault(msg.sequence, []).append(msg)
        return []
    if state.log[msg.sequence] != msg.digest:
        state.alarms.append(
            f"[{now}] {state.address}: commit for seq {msg.sequence} names a "
            "digest that was never prepared here"
        )
        return []
    if msg.leg == 2:
        record = (msg.sequence, state.log[msg.sequence])
        if record not in state.committed:
            state.committed.append(record)
            state.executed += 1
    return [_follower_ack(state, msg)]


def _follower_ack(state: NodeState, msg: ProtocolMessage) -> tuple[Address, ProtocolMessage]:
    return (
        msg.sender,
        ProtocolMessage(
            kind=MessageKind.PREPARE,
            committee=msg.committee,
            sequence=msg.sequence,
            sender=state.address,
            stage=msg.stage,
            leg=msg.leg,
            digest=msg.digest,
            request_id=msg.request_id,
            round_id=msg.round_id,
        ),
    )


# -- verification committee ---------------------------------------------------


def _vleader_aggregate(state: NodeState, msg: ProtocolMessage) -> Outbox:
    state.vbuffer.setdefault(msg.round_id, []).append(msg)
    return _vleader_consider(state, msg.round_id)


def _vleader_consider(state: NodeState, round_id: int) -> Outbox:
    """Start ordering round_id if it is fully buffered and the leader is free."""
    want = state.expected.get(round_id, len(state.participants))
    # Retries can land two aggregates from one committee; count committees.
    have = len({m.committee for m in state.vbuffer.get(round_id, [])})
    if want <= 0 or have < want:
        return []
    if state.vcurrent is not None or state.held:
        if round_id not in state.vqueue:
            state.vqueue.append(round_id)
        return []
    return _vleader_start(state, round_id)


def _vleader_start(state: NodeState, round_id: int) -> Outbox:
    entries = state.vbuffer.pop(round_id)
    if round_id in state.vqueue:
        state.vqueue.remove(round_id)
    state.vcurrent = OrderingRound(round_id=round_id, entries=entries)
    return _vleader_exchange(state)


def _vleader_exchange(state: NodeState) -> Outbox:
    current = state.vcurrent
    assert current is not None
    out: Outbox = []
    for member in state.members:
        out.append(
            (
                member,
                ProtocolMessage(
                    kind=MessageKind.PRE_PREPARE,
                    committee=-1,
                    sequence=state.height,
                    sender=state.address,
                    vround=current.vround,
                    round_id=current.round_id,
                    block=current.block,
                ),
            )
        )
    return out


def _vleader_exchange_ack(state: NodeState, msg: ProtocolMessage, now: int) -> Outbox:
    current = state.vcurrent
    if (
        current is None
        or msg.round_id != current.round_id
        or msg.vround != current.vround
        or msg.sender not in state.members
    ):
        return []
    current.acks.add(msg.sender)
    if len(current.acks) < len(state.members):
        return []
    current.acks = set()
    if current.vround < 4:
        current.vround += 1
        if current.vround == 4:
            # The last exchange carries the proposed block to every member.
            current.block, current.reports = total_order(
                current.entries, state.height, state.min_quorum
            )
        return _vleader_exchange(state)
    return _vleader_finish(state, now)


def _vleader_finish(state: NodeState, now: int) -> Outbox:
    current = state.vcurrent
    assert current is not None
    block, reports = current.block, current.reports
    assert block is not None
    for report in reports:
        state.alarms.append(f"[{now}] {state.address}: {report}")
    state.height += 1
    signers = frozenset(state.members) | {state.address}
    signed = Block(
        height=block.height,
        entries=block.entries,
        signature=MultiSignature(
            digest=block.digest(), signers=signers, threshold=len(signers)
        ),
    )
    accepted = {(c, s) for c, s, _ in block.entries}
    out: Outbox = []
    for entry in current.entries:
        if (entry.committee, entry.sequence) not in accepted:
            continue
        out.append(
            (
                consensus(entry.committee),
                ProtocolMessage(
                    kind=MessageKind.COMMIT_NOTICE,
                    committee=entry.committee,
                    sequence=entry.sequence,
                    sender=state.address,
                    digest=entry.digest,
                    block=signed,
                    request_id=entry.request_id,
                    round_id=current.round_id,
                ),
            )
        )
    state.executed += len(block.entries)
    state.vcurrent = None
    if state.hold_after_order:
        state.held = True
        return out
    out.extend(_vleader_resume(state))
    return out


def _vleader_resume(state: NodeState) -> Outbox:
    """Pick up the oldest queued ordering round, if any is ready."""
    ready = []
    for r in state.vqueue:
        want = state.expected.get(r, len(state.participants))
        have = len({m.committee for m in state.vbuffer.get(r, ())})
        if want > 0 and have >= want:
            ready.append(r)
    if not ready:
        return []
    return _vleader_start(state, min(ready))


# -- runner hooks -------------------------------------------------------------


def verification_service_complete(state: NodeState) -> tuple[NodeState, Outbox]:
    """Clear the post-ordering service hold and resume queued rounds.

    Only meaningful when the simulator models a per-batch verification cost;
    with the default zero cost the leader never holds.
    """
    state.held = False
    if state.vcurrent is None:
        return state, _vleader_resume(state)
    return state, []


def set_round_expectation(
    state: NodeState, round_id: int, count: int
) -> tuple[NodeState, Outbox]:
    """Adjust how many aggregates round_id must collect before ordering.

    The simulator lowers the count when a committee stalls mid-round. A count
    of zero abandons the round outright.
    """
    if count <= 0:
        state.expected[round_id] = 0
        state.vbuffer.pop(round_id, None)
        if round_id in state.vqueue:
            state.vqueue.remove(round_id)
        return state, []
    state.expected[round_id] = count
    return state, _vleader_consider(state, round_id)


def set_active(state: NodeState, active: Iterable[Address]) -> NodeState:
    """Replace the leader's active follower set (crash recovery swap)."""
    state.active = tuple(active)
    return state


def abort(state: NodeState, seq: int) -> PendingEntry | None:
    """Drop a stalled sequence so the request can be retried afresh."""
    return state.pending.pop(seq, None)


def trigger_fallback(
    states: dict[Address, NodeState], committees: Iterable[int]
) -> Outbox:
    """Switch the named committees to attestation-free operation.

    Idempotent. The leader flips immediately; followers flip when the
    activation message reaches them. In-flight sequences finish with the
    participant snapshot they started with (a counter failure does not crash
    anyone, so the old quorum is still reachable), and only sequences assigned
    afterwards use the widened follower set. Sequence numbers keep counting up
    from the counter's last value, so the no-rebind rule carries over
    unchanged.
    """
    out: Outbox = []
    for committee in committees:
        leader = states[consensus(committee)]
        if leader.mode is Mode.FALLBACK:
            continue
        leader.mode = Mode.FALLBACK
        if leader.counter is not None:
            leader.next_seq = max(leader.next_seq, leader.counter.value)
        leader.active = leader.followers
        for follower in leader.followers:
            out.append(
                (
                    follower,
                    ProtocolMessage(
                        kind=MessageKind.FALLBACK_ACTIVATE,
                        committee=committee,
                        sequence=0,
                        sender=leader.address,
                    ),
                )
            )
    return out
