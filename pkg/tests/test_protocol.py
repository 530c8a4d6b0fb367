"""Protocol state machines: choreography, safety checks, and total ordering."""
from __future__ import annotations

import copy
import dataclasses
from collections import Counter, deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccobft.cco import solve_exact
from ccobft.protocol import (
    CLIENT,
    AttestationAuthority,
    MessageKind,
    Mode,
    MultiSignature,
    NodeState,
    ProtocolMessage,
    Role,
    Stage,
    assemble,
    consensus,
    handle_message,
    request_digest,
    total_order,
    trigger_fallback,
    verification,
)
from ccobft.sim import random_configuration

from conftest import uniform_us_instance


def pump(states, initial, record=None):
    """Deliver messages FIFO until quiescent; count kinds, capture replies."""
    queue = deque(initial)
    counts: Counter = Counter()
    replies = []
    now = 0
    while queue:
        dest, msg = queue.popleft()
        counts[msg.kind] += 1
        if record is not None:
            record.append((dest, msg))
        if dest == CLIENT:
            replies.append(msg)
            continue
        _, out = handle_message(states[dest], msg, now)
        queue.extend(out)
        now += 1
    return counts, replies


def client_request(committee, request_id, round_id, payload=0):
    msg = ProtocolMessage(
        kind=MessageKind.REQUEST,
        committee=committee,
        sequence=0,
        sender=CLIENT,
        payload_size=payload,
        request_id=request_id,
        round_id=round_id,
    )
    return (consensus(committee), msg)


def aggregate(committee, seq, digest, threshold=3, sig_digest=None):
    signers = frozenset(consensus(committee * 10 + k) for k in range(max(threshold, 3)))
    return ProtocolMessage(
        kind=MessageKind.AGGREGATE_PREPARED,
        committee=committee,
        sequence=seq,
        sender=consensus(committee),
        digest=digest,
        signatures=MultiSignature(
            digest=sig_digest if sig_digest is not None else digest,
            signers=signers,
            threshold=threshold,
        ),
    )


# -- full-round choreography --------------------------------------------------


def test_normal_round_message_counts(minimal_instance):
    config = solve_exact(minimal_instance).config
    states = assemble(minimal_instance, config)
    leader = config.leaders()[0]
    counts, replies = pump(states, [client_request(leader, 0, 0)])

    assert counts[MessageKind.PRE_PREPARE] == 12
    assert counts[MessageKind.PREPARE] == 16
    assert counts[MessageKind.AGGREGATE_PREPARED] == 1
    assert counts[MessageKind.COMMIT_NOTICE] == 5
    assert counts[MessageKind.REPLY] == 1
    assert len(replies) == 1
    assert replies[0].digest == request_digest(0, 0)
    assert states[consensus(leader)].committed == [(1, request_digest(0, 0))]


def test_fallback_round_runs_classic_quorums(minimal_instance):
    config = random_configuration(minimal_instance, seed=0, fallback_all=True)
    states = assemble(minimal_instance, config)
    leader = config.leaders()[0]
    record = []
    counts, replies = pump(states, [client_request(leader, 0, 0)], record)

    # Three active followers instead of two widen every committee exchange.
    assert counts[MessageKind.PRE_PREPARE] == 14
    assert counts[MessageKind.PREPARE] == 20
    assert counts[MessageKind.COMMIT_NOTICE] == 7
    assert len(replies) == 1
    committee_pre = [
        m for _, m in record
        if m.kind is MessageKind.PRE_PREPARE and m.committee != -1
    ]
    assert all(m.attestation is None for m in committee_pre)


def test_no_alarms_in_a_clean_run(minimal_instance):
    config = solve_exact(minimal_instance).config
    states = assemble(minimal_instance, config)
    pump(states, [client_request(config.leaders()[0], 0, 0)])
    assert all(not s.alarms for s in states.values())


def test_two_committees_commit_identical_blocks():
    inst = uniform_us_instance(8, 1000, 1000, 500)
    config = solve_exact(inst).config
    states = assemble(inst, config)
    requests = [
        client_request(leader, i, 0) for i, leader in enumerate(config.leaders())
    ]
    _, replies = pump(states, requests)
    assert len(replies) == 2

    members = [
        s for s in states.values() if s.role is Role.VERIFICATION_FOLLOWER
    ]
    assert len(members) >= 2
    reference = members[0].blocks
    assert len(reference) == 1
    assert all(m.blocks == reference for m in members)
    # One entry per committee, in (leader, sequence) order.
    entries = reference[0].entries
    assert [c for c, _, _ in entries] == sorted(config.leaders())


def test_replies_never_conflict_on_a_slot():
    inst = uniform_us_instance(8, 1000, 1000, 500)
    config = solve_exact(inst).config
    states = assemble(inst, config)
    replies = []
    for round_id in range(3):
        batch = [
            client_request(leader, round_id * 2 + i, round_id)
            for i, leader in enumerate(config.leaders())
        ]
        _, got = pump(states, batch)
        replies.extend(got)
    assert len(replies) == 6
    by_slot = {}
    for r in replies:
        by_slot.setdefault((r.committee, r.sequence), set()).add(r.digest)
    assert all(len(digests) == 1 for digests in by_slot.values())


def test_out_of_order_legs_are_buffered():
    authority = AttestationAuthority()
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=authority, mode=Mode.FALLBACK,
    )
    leg2 = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=2, digest="d",
    )
    _, out = handle_message(follower, leg2, 0)
    assert out == []
    leg1 = dataclasses.replace(leg2, leg=1)
    _, out = handle_message(follower, leg1, 1)
    assert [m.leg for _, m in out] == [1, 2]


# -- attestation and equivocation defenses ------------------------------------


def test_equivocating_reassignment_is_caught_and_alarmed():
    authority = AttestationAuthority(master_seed=5)
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=authority,
    )
    genuine = authority.issue(0).assign("digest-a")
    first = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=1,
        digest="digest-a", attestation=genuine,
    )
    _, out = handle_message(follower, first, 0)
    assert len(out) == 1

    # A reset counter re-signs value 1 for a different digest; the binding
    # table catches the reuse even though the tag itself is valid.
    resigned = authority.issue(0).assign("digest-b")
    second = dataclasses.replace(first, digest="digest-b", attestation=resigned)
    _, out = handle_message(follower, second, 1)
    assert out == []
    assert any("equivocation" in alarm for alarm in follower.alarms)
    assert follower.log[1] == "digest-a"


def test_tampered_attestation_is_rejected():
    authority = AttestationAuthority(master_seed=5)
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=authority,
    )
    genuine = authority.issue(0).assign("digest-a")
    forged = dataclasses.replace(genuine, digest="digest-b")
    msg = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=1,
        digest="digest-b", attestation=forged,
    )
    _, out = handle_message(follower, msg, 0)
    assert out == []
    assert any("invalid attestation" in alarm for alarm in follower.alarms)
    assert 1 not in follower.log


def test_missing_attestation_is_rejected_in_normal_mode():
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=AttestationAuthority(),
    )
    msg = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=1, digest="d",
    )
    _, out = handle_message(follower, msg, 0)
    assert out == []
    assert any("invalid attestation" in alarm for alarm in follower.alarms)


def test_log_refuses_to_rebind_a_sequence():
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=AttestationAuthority(), mode=Mode.FALLBACK,
    )
    first = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=1, digest="digest-a",
    )
    _, out = handle_message(follower, first, 0)
    assert len(out) == 1
    second = dataclasses.replace(first, digest="digest-b")
    _, out = handle_message(follower, second, 1)
    assert out == []
    assert any("rebind refused" in alarm for alarm in follower.alarms)
    assert follower.log[1] == "digest-a"


def test_commit_for_unprepared_digest_is_alarmed():
    follower = NodeState(
        address=consensus(1), role=Role.ACTIVE_FOLLOWER, committee=0, f=1,
        authority=AttestationAuthority(), mode=Mode.FALLBACK,
    )
    prepare = ProtocolMessage(
        kind=MessageKind.PRE_PREPARE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.PREPARE, leg=1, digest="digest-a",
    )
    handle_message(follower, prepare, 0)
    rogue = ProtocolMessage(
        kind=MessageKind.COMMIT_NOTICE, committee=0, sequence=1,
        sender=consensus(0), stage=Stage.COMMIT, leg=1, digest="digest-b",
    )
    _, out = handle_message(follower, rogue, 1)
    assert out == []
    assert any("never prepared" in alarm for alarm in follower.alarms)


# -- fallback activation ------------------------------------------------------


def test_in_flight_sequences_finish_with_their_original_participants(minimal_instance):
    config = solve_exact(minimal_instance).config
    states = assemble(minimal_instance, config)
    leader_id = config.leaders()[0]
    leader = states[consensus(leader_id)]
    original = set(leader.active)
    assert len(original) == 2

    _, first_out = handle_message(states[consensus(leader_id)], client_request(leader_id, 0, 0)[1], 0)
    activations = trigger_fallback(states, [leader_id])
    assert len(activations) == 3
    for dest, msg in activations:
        handle_message(states[dest], msg, 1)
    assert all(
        s.role is Role.ACTIVE_FOLLOWER
        for s in states.values()
        if s.committee == leader_id and s.role is not Role.CONSENSUS_LEADER
    )

    record = []
    _, replies = pump(states, first_out, record)
    assert len(replies) == 1
    committee_targets = {
        dest for dest, m in record
        if m.sender == consensus(leader_id)
        and m.kind in (MessageKind.PRE_PREPARE, MessageKind.COMMIT_NOTICE)
    }
    assert committee_targets == original

    # The next request uses the widened set and the next counter value.
    record = []
    _, replies = pump(states, [client_request(leader_id, 1, 1)], record)
    assert len(replies) == 1
    assert replies[0].sequence == 2
    leg_one = [
        dest for dest, m in record
        if m.kind is MessageKind.PRE_PREPARE and m.committee == leader_id and m.leg == 1
    ]
    assert len(leg_one) == 3


def test_trigger_fallback_is_idempotent(minimal_instance):
    config = solve_exact(minimal_instance).config
    states = assemble(minimal_instance, config)
    leader_id = config.leaders()[0]
    first = trigger_fallback(states, [leader_id])
    assert len(first) == 3
    assert trigger_fallback(states, [leader_id]) == []
    assert states[consensus(leader_id)].mode is Mode.FALLBACK


def test_handler_is_deterministic_on_equal_states(minimal_instance):
    config = solve_exact(minimal_instance).config
    states_a = assemble(minimal_instance, config)
    states_b = copy.deepcopy(states_a)
    leader_id = config.leaders()[0]
    msg = client_request(leader_id, 0, 0)[1]

    _, out_a = handle_message(states_a[consensus(leader_id)], copy.deepcopy(msg), 0)
    _, out_b = handle_message(states_b[consensus(leader_id)], copy.deepcopy(msg), 0)
    assert out_a == out_b
    assert states_a[consensus(leader_id)] == states_b[consensus(leader_id)]


# -- total ordering -----------------------------------------------------------


def test_block_entries_sort_by_committee_then_sequence():
    entries = [aggregate(2, 1, "c"), aggregate(0, 2, "b"), aggregate(0, 1, "a")]
    block, reports = total_order(entries, height=0, min_quorum=3)
    assert reports == []
    assert block.entries == ((0, 1, "a"), (0, 2, "b"), (2, 1, "c"))
    assert block.height == 0


def test_duplicate_entries_collapse_with_a_report():
    entries = [aggregate(0, 1, "a"), aggregate(0, 1, "a")]
    block, reports = total_order(entries, height=3, min_quorum=3)
    assert block.entries == ((0, 1, "a"),)
    assert any("duplicate" in r for r in reports)


def test_conflicting_digests_poison_the_slot():
    entries = [aggregate(0, 1, "a"), aggregate(0, 1, "b"), aggregate(0, 1, "a")]
    block, reports = total_order(entries, height=0, min_quorum=3)
    assert block.entries == ()
    assert any("conflicting" in r for r in reports)


def test_thin_signatures_are_excluded():
    entries = [aggregate(0, 1, "a", threshold=2), aggregate(1, 1, "b")]
    block, reports = total_order(entries, height=0, min_quorum=3)
    assert block.entries == ((1, 1, "b"),)
    assert any("unverifiable" in r for r in reports)


def test_signature_over_the_wrong_digest_is_excluded():
    entries = [aggregate(0, 1, "a", sig_digest="z")]
    block, _ = total_order(entries, height=0, min_quorum=3)
    assert block.entries == ()


@given(
    st.lists(
        st.tuples(
            st.integers(min_value=0, max_value=3),
            st.integers(min_value=1, max_value=3),
            st.sampled_from(["a", "b"]),
        ),
        max_size=12,
    )
)
def test_total_order_matches_the_slot_rule(slots):
    # A slot enters the block iff every aggregate for it names one digest;
    # the surviving digest is that one, and entries sort by (committee, seq).
    entries = [aggregate(c, s, d) for c, s, d in slots]
    block, _ = total_order(entries, height=0, min_quorum=3)

    digests_by_slot: dict[tuple[int, int], set] = {}
    for c, s, d in slots:
        digests_by_slot.setdefault((c, s), set()).add(d)
    expected = tuple(
        (c, s, next(iter(ds)))
        for (c, s), ds in sorted(digests_by_slot.items())
        if len(ds) == 1
    )
    assert block.entries == expected
