"""Committee consensus protocol: counters, messages, and state machines."""
from .counter import (
    AttestationAuthority,
    CompromisedCounterError,
    CounterAttestation,
    CounterError,
    TrustedCounter,
    counter_assign,
    counter_verify,
)
from .deployment import assemble
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
    verification,
)
from .node import (
    Mode,
    NodeState,
    PendingEntry,
    Role,
    abort,
    handle_message,
    set_active,
    set_round_expectation,
    trigger_fallback,
    verification_service_complete,
)
from .ordering import total_order

__all__ = [
    "AttestationAuthority",
    "CompromisedCounterError",
    "CounterAttestation",
    "CounterError",
    "TrustedCounter",
    "counter_assign",
    "counter_verify",
    "assemble",
    "CLIENT",
    "Address",
    "Block",
    "MessageKind",
    "MultiSignature",
    "ProtocolMessage",
    "Stage",
    "consensus",
    "request_digest",
    "verification",
    "Mode",
    "NodeState",
    "PendingEntry",
    "Role",
    "abort",
    "handle_message",
    "set_active",
    "set_round_expectation",
    "trigger_fallback",
    "verification_service_complete",
    "total_order",
]
