"""Deterministic total ordering of prepared batches into blocks."""
from __future__ import annotations

from .messages import Block, MessageKind, ProtocolMessage


def total_order(
    entries: list[ProtocolMessage], height: int, min_quorum: int
) -> tuple[Block, list[str]]:
    """Build the next block from AggregatePrepared messages.

    Ordering is by (committee leader id, sequence). Entries that fail
    signature verification are excluded, as are duplicates of an already
    accepted (committee, sequence) slot; every exclusion is reported.
    Conflicting digests for one slot discard the slot entirely: a slot that
    cannot be attributed unambiguously never enters the chain.
    """
    reports: list[str] = []
    accepted: dict[tuple[int, int], str] = {}
    poisoned: set[tuple[int, int]] = set()
    for msg in sorted(entries, key=lambda m: (m.committee, m.sequence)):
        if msg.kind is not MessageKind.AGGREGATE_PREPARED:
            reports.append(f"non-aggregate message from {msg.sender} excluded")
            continue
        sig = msg.signatures
        if sig is None or not sig.verify(msg.digest) or sig.threshold < min_quorum:
            reports.append(
                f"committee {msg.committee} seq {msg.sequence}: unverifiable multi-signature"
            )
            continue
        slot = (msg.committee, msg.sequence)
        if slot in poisoned:
            continue
        if slot in accepted:
            if accepted[slot] == msg.digest:
                reports.append(f"duplicate entry for committee {slot[0]} seq {slot[1]}")
            else:
                del accepted[slot]
                poisoned.add(slot)
                reports.append(
                    f"conflicting digests for committee {slot[0]} seq {slot[1]}; slot dropped"
                )
            continue
        accepted[slot] = msg.digest
    ordered = tuple((c, s, accepted[(c, s)]) for c, s in sorted(accepted))
    return Block(height=height, entries=ordered), reports
