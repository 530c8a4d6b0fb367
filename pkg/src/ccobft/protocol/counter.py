"""Trusted monotonic counters and their attestations.

A counter binds each (node, value) pair to at most one digest, ever: values
only move forward and an assignment consumes the value it returns. Tags are
HMACs under per-node keys held by an attestation authority, standing in for
TEE remote attestation; tampering with any attested field breaks the tag.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field


class CounterError(Exception):
    pass


class CompromisedCounterError(CounterError):
    """assign() refused because the counter is marked compromised."""


@dataclass(frozen=True)
class CounterAttestation:
    node: int
    value: int
    digest: str
    tag: str


def _tag(key: bytes, node: int, value: int, digest: str) -> str:
    return hmac.new(key, f"{node}:{value}:{digest}".encode(), hashlib.sha256).hexdigest()


@dataclass
class TrustedCounter:
    node: int
    key: bytes
    value: int = 0
    compromised: bool = False

    def assign(self, digest: str) -> CounterAttestation:
        """Bind the next counter value to a digest and attest the binding."""
        if self.compromised:
            raise CompromisedCounterError(f"counter of node {self.node} is compromised")
        self.value += 1
        return CounterAttestation(
            node=self.node,
            value=self.value,
            digest=digest,
            tag=_tag(self.key, self.node, self.value, digest),
        )


@dataclass
class AttestationAuthority:
    """Issues counters and checks attestations; revocation models a known
    TEE compromise."""

    master_seed: int = 0
    revoked: set[int] = field(default_factory=set)

    def _key_for(self, node: int) -> bytes:
        return hashlib.sha256(f"authority:{self.master_seed}:{node}".encode()).digest()

    def issue(self, node: int) -> TrustedCounter:
        return TrustedCounter(node=node, key=self._key_for(node))

    def revoke(self, node: int) -> None:
        self.revoked.add(node)

    def verify(self, attestation: CounterAttestation) -> bool:
        if attestation.node in self.revoked:
            return False
        expected = _tag(
            self._key_for(attestation.node),
            attestation.node,
            attestation.value,
            attestation.digest,
        )
        return hmac.compare_digest(expected, attestation.tag)


def counter_assign(counter: TrustedCounter, digest: str) -> CounterAttestation:
    return counter.assign(digest)


def counter_verify(attestation: CounterAttestation, authority: AttestationAuthority) -> bool:
    return authority.verify(attestation)
