"""Message and block types exchanged by the protocol state machines."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .counter import CounterAttestation


class MessageKind(Enum):
    REQUEST = "Request"
    PRE_PREPARE = "PrePrepare"
    PREPARE = "Prepare"
    AGGREGATE_PREPARED = "AggregatePrepared"
    COMMIT_NOTICE = "CommitNotice"
    REPLY = "Reply"
    FALLBACK_ACTIVATE = "FallbackActivate"


class Stage(Enum):
    """Which committee exchange a PrePrepare/Prepare/CommitNotice belongs to."""

    PREPARE = "prepare"
    COMMIT = "commit"


class Address(NamedTuple):
    space: str  # "c" consensus, "v" verification, "client"
    index: int


CLIENT = Address("client", 0)


def consensus(i: int) -> Address:
    return Address("c", i)


def verification(i: int) -> Address:
    return Address("v", i)


def request_digest(request_id: int, payload_size: int) -> str:
    return hashlib.sha256(f"request:{request_id}:{payload_size}".encode()).hexdigest()[:16]


@dataclass(frozen=True)
class MultiSignature:
    """Aggregate signature abstraction: a digest endorsed by a signer set."""

    digest: str
    signers: frozenset[Address]
    threshold: int

    def verify(self, digest: str | None = None) -> bool:
        if digest is not None and digest != self.digest:
            return False
        return len(self.signers) >= self.threshold


@dataclass(frozen=True)
class Block:
    height: int
    entries: tuple[tuple[int, int, str], ...]  # (committee leader, sequence, digest)
    signature: MultiSignature | None = None

    def digest(self) -> str:
        body = ";".join(f"{c}:{s}:{d}" for c, s, d in self.entries)
        return hashlib.sha256(f"block:{self.height}:{body}".encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ProtocolMessage:
    kind: MessageKind
    committee: int  # leader node id; -1 for verification-internal traffic
    sequence: int
    sender: Address
    stage: Stage | None = None
    leg: int = 0
    vround: int = 0
    payload_size: int = 0
    digest: str = ""
    attestation: CounterAttestation | None = None
    signatures: MultiSignature | None = None
    block: Block | None = None
    # Run bookkeeping (not protocol state): which workload item and round.
    request_id: int = -1
    round_id: int = -1
