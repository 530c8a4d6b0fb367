"""Problem instances: node profiles, delay matrices, and validation.

All delays live as integer microsecond ticks internally. JSON files carry
milliseconds; conversion happens at the load/save boundary so that solver
comparisons and simulator timestamps stay exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

US_PER_MS = 1000


def ms_to_us(ms: float) -> int:
    """Convert a millisecond value to integer microsecond ticks."""
    return int(round(float(ms) * US_PER_MS))


def us_to_ms(us: int) -> float:
    return us / US_PER_MS


def _us_array(values, shape=None) -> np.ndarray:
    arr = np.asarray(
        [[ms_to_us(v) for v in row] for row in values]
        if shape == 2
        else [ms_to_us(v) for v in values],
        dtype=np.int64,
    )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NodeProfile:
    """Failure profile of one consensus node.

    byzantine_rate and crash_rate are probabilities in [0, 1]; tee_failed is 1
    when the node's trusted counter is known to be unusable.
    """

    byzantine_rate: float
    crash_rate: float
    tee_failed: int = 0


@dataclass(frozen=True)
class SystemParams:
    f: int
    byzantine_cap: float
    crash_cap: float


@dataclass(frozen=True, eq=False)
class DelayMatrix:
    """One-way delays between consensus nodes and to/from the verification leader.

    d[i][j] is the one-way delay i -> j in µs (asymmetry allowed). to_v[i] and
    from_v[i] are the legs between node i and the verification committee's
    leader.
    """

    d: np.ndarray
    to_v: np.ndarray
    from_v: np.ndarray

    def rtt(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError(f"rtt({i}, {j}): round trip needs two distinct nodes")
        return int(self.d[i, j]) + int(self.d[j, i])

    def rtt_matrix(self) -> np.ndarray:
        """Full round-trip matrix d + d.T (diagonal zero)."""
        return self.d + self.d.T


def rtt(delays: DelayMatrix, i: int, j: int) -> int:
    """Round-trip time between two distinct nodes, in µs."""
    return delays.rtt(i, j)


@dataclass(frozen=True, eq=False)
class VerificationCommittee:
    """The fixed verification committee: a leader plus member nodes.

    rtts is the member_count x member_count matrix of one-way delays inside
    the committee; only leader<->member pairs enter the ordering cost.
    """

    member_count: int
    leader_index: int
    rtts: np.ndarray

    def ordering_latency_us(self) -> int:
        """Duration of the four-exchange internal ordering, in µs.

        Each exchange waits for every member, so one exchange costs the worst
        leader<->member round trip and the whole ordering costs four of them.
        """
        worst = 0
        li = self.leader_index
        for m in range(self.member_count):
            if m == li:
                continue
            worst = max(worst, int(self.rtts[li, m]) + int(self.rtts[m, li]))
        return 4 * worst

    def member_indices(self) -> list[int]:
        return [m for m in range(self.member_count) if m != self.leader_index]


@dataclass(frozen=True, eq=False)
class Instance:
    nodes: tuple[NodeProfile, ...]
    delays: DelayMatrix
    verification: VerificationCommittee
    params: SystemParams

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def min_committee_size(self) -> int:
        return 3 * self.params.f + 1

    @property
    def max_committees(self) -> int:
        return self.n // self.min_committee_size

    def tee_flags(self) -> np.ndarray:
        return np.array([p.tee_failed for p in self.nodes], dtype=np.uint8)

    def with_tee_failures(self, failed: set[int] | frozenset[int]) -> "Instance":
        """Copy of this instance with the given nodes marked TEE-failed."""
        nodes = tuple(
            replace(p, tee_failed=1) if i in failed else p
            for i, p in enumerate(self.nodes)
        )
        return replace(self, nodes=nodes)


def validate_instance(instance: Instance) -> list[str]:
    """Check structural well-formedness. Returns human-readable violations.

    Never raises; an empty list means the instance is usable. Repeated calls
    return the same list.
    """
    out: list[str] = []
    n = instance.n
    d, to_v, from_v = instance.delays.d, instance.delays.to_v, instance.delays.from_v

    if n == 0:
        return ["instance has no nodes"]
    if d.shape != (n, n):
        out.append(f"delay matrix shape {d.shape} does not match node count {n}")
        return out
    if to_v.shape != (n,):
        out.append(f"d_to_v length {to_v.shape[0]} does not match node count {n}")
    if from_v.shape != (n,):
        out.append(f"d_from_v length {from_v.shape[0]} does not match node count {n}")

    diag = np.diagonal(d)
    if np.any(diag != 0):
        bad = int(np.nonzero(diag)[0][0])
        out.append(f"self-delay d[{bad}][{bad}] must be 0")
    off = d[~np.eye(n, dtype=bool)]
    if off.size and off.min() <= 0:
        out.append("off-diagonal delays must be positive")
    if to_v.size and to_v.min() <= 0:
        out.append("d_to_v entries must be positive")
    if from_v.size and from_v.min() <= 0:
        out.append("d_from_v entries must be positive")

    for i, prof in enumerate(instance.nodes):
        if not 0.0 <= prof.byzantine_rate <= 1.0:
            out.append(f"node {i}: byzantine rate {prof.byzantine_rate} outside [0, 1]")
        if not 0.0 <= prof.crash_rate <= 1.0:
            out.append(f"node {i}: crash rate {prof.crash_rate} outside [0, 1]")
        if prof.tee_failed not in (0, 1):
            out.append(f"node {i}: tee flag must be 0 or 1")

    f = instance.params.f
    if f < 1:
        out.append(f"f must be at least 1, got {f}")
    elif n < 3 * f + 1:
        out.append(f"{n} nodes cannot host one committee of {3 * f + 1}")
    if not 0.0 <= instance.params.byzantine_cap <= 1.0:
        out.append("leader byzantine cap outside [0, 1]")
    if not 0.0 <= instance.params.crash_cap <= 1.0:
        out.append("leader crash cap outside [0, 1]")

    v = instance.verification
    if v.member_count < 1:
        out.append("verification committee needs at least a leader")
    elif not 0 <= v.leader_index < v.member_count:
        out.append(f"verification leader index {v.leader_index} out of range")
    if v.rtts.shape != (v.member_count, v.member_count):
        out.append(
            f"verification delay matrix shape {v.rtts.shape} does not match "
            f"member count {v.member_count}"
        )
    else:
        if np.any(np.diagonal(v.rtts) != 0):
            out.append("verification self-delays must be 0")
        voff = v.rtts[~np.eye(v.member_count, dtype=bool)]
        if voff.size and voff.min() <= 0:
            out.append("verification delays must be positive")
    return out


# --- JSON interchange (milliseconds on disk) ---------------------------------


def instance_from_dict(doc: dict) -> Instance:
    nodes = tuple(
        NodeProfile(
            byzantine_rate=float(nd["b"]),
            crash_rate=float(nd["c"]),
            tee_failed=int(nd.get("t", 0)),
        )
        for nd in doc["nodes"]
    )
    delays = DelayMatrix(
        d=_us_array(doc["d"], shape=2),
        to_v=_us_array(doc["d_to_v"]),
        from_v=_us_array(doc["d_from_v"]),
    )
    vdoc = doc["verification"]
    verification = VerificationCommittee(
        member_count=int(vdoc["members"]),
        leader_index=int(vdoc["leader"]),
        rtts=_us_array(vdoc["rtts"], shape=2),
    )
    params = SystemParams(
        f=int(doc["f"]),
        byzantine_cap=float(doc["B"]),
        crash_cap=float(doc["C"]),
    )
    return Instance(nodes=nodes, delays=delays, verification=verification, params=params)


def instance_to_dict(instance: Instance) -> dict:
    return {
        "f": instance.params.f,
        "B": instance.params.byzantine_cap,
        "C": instance.params.crash_cap,
        "nodes": [
            {"b": p.byzantine_rate, "c": p.crash_rate, "t": p.tee_failed}
            for p in instance.nodes
        ],
        "d": [[us_to_ms(int(x)) for x in row] for row in instance.delays.d],
        "d_to_v": [us_to_ms(int(x)) for x in instance.delays.to_v],
        "d_from_v": [us_to_ms(int(x)) for x in instance.delays.from_v],
        "verification": {
            "members": instance.verification.member_count,
            "leader": instance.verification.leader_index,
            "rtts": [[us_to_ms(int(x)) for x in row] for row in instance.verification.rtts],
        },
    }


def load_instance(path: str | Path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(instance: Instance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")
