"""Discrete-event queue with deterministic tie-breaking."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..protocol.messages import Address, ProtocolMessage


class EventKind(Enum):
    DELIVER = "Deliver"
    CLIENT_SUBMIT = "ClientSubmit"
    FAULT_INJECT = "FaultInject"
    RECOVER_TEE = "RecoverTee"
    DEADLINE = "Deadline"
    SERVICE_DONE = "ServiceDone"


@dataclass(frozen=True)
class Event:
    time: int
    tiebreak: int
    kind: EventKind
    dest: Address | None = None
    message: ProtocolMessage | None = None
    payload: Any = None


class EventQueue:
    """Min-heap over (time, tiebreak); tiebreak is the insertion sequence, so
    simultaneous events replay in the exact order they were scheduled."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._next_tiebreak = 0

    def push(
        self,
        time: int,
        kind: EventKind,
        dest: Address | None = None,
        message: ProtocolMessage | None = None,
        payload: Any = None,
    ) -> None:
        event = Event(
            time=time,
            tiebreak=self._next_tiebreak,
            kind=kind,
            dest=dest,
            message=message,
            payload=payload,
        )
        self._next_tiebreak += 1
        heapq.heappush(self._heap, (time, event.tiebreak, event))

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)
