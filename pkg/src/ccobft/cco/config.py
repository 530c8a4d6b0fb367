"""Configuration value types and their JSON interchange form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..model import us_to_ms, ms_to_us


class ConstraintId(Enum):
    COMMITTEE_COUNT = "CommitteeCount"
    LEADER_SCOPE = "LeaderScope"
    UNIQUE_MEMBERSHIP = "UniqueMembership"
    COMMITTEE_SIZE = "CommitteeSize"
    LEADER_BYZANTINE = "LeaderByzantine"
    LEADER_CRASH = "LeaderCrash"
    LINK_SCOPE = "LinkScope"
    SIGMA_CONSISTENCY = "SigmaConsistency"
    CONNECTION_COUNT = "ConnectionCount"


@dataclass(frozen=True)
class Violation:
    constraint: ConstraintId
    subject: object
    detail: str

    def __str__(self) -> str:
        return f"{self.constraint.value}[{self.subject}]: {self.detail}"


@dataclass(frozen=True)
class LatencyBreakdown:
    """Per-phase latency in µs ticks. t_tr is the optimized total."""

    t_pre: int
    t_cv: int
    t_ver: int
    t_vc: int
    t_com: int

    @property
    def t_tr(self) -> int:
        return self.t_pre + self.t_cv + self.t_ver + self.t_vc + self.t_com

    def as_ms_dict(self) -> dict:
        return {
            "t_pre": us_to_ms(self.t_pre),
            "t_cv": us_to_ms(self.t_cv),
            "t_ver": us_to_ms(self.t_ver),
            "t_vc": us_to_ms(self.t_vc),
            "t_com": us_to_ms(self.t_com),
            "t_tr": us_to_ms(self.t_tr),
        }


@dataclass(frozen=True)
class Configuration:
    """A committee plan: who leads whom, which links are active, which
    committees run in fallback.

    leader_of maps every node to its committee's leader (leaders map to
    themselves). active_links holds (leader, follower) pairs. fallback_flags
    is keyed by leader.
    """

    leader_of: dict[int, int]
    active_links: frozenset[tuple[int, int]]
    fallback_flags: dict[int, bool]
    committee_count: int

    def leaders(self) -> list[int]:
        return sorted(i for i, l in self.leader_of.items() if i == l)

    def committees(self) -> dict[int, list[int]]:
        """Leader id -> sorted follower ids (leader excluded)."""
        out: dict[int, list[int]] = {l: [] for l in self.leaders()}
        for node, leader in sorted(self.leader_of.items()):
            if node != leader and leader in out:
                out[leader].append(node)
        return out

    def active_by_leader(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {l: [] for l in self.leaders()}
        for leader, follower in sorted(self.active_links):
            if leader in out:
                out[leader].append(follower)
        return out


@dataclass(frozen=True)
class SolveLimits:
    time_budget: float = 60.0
    node_cap_exact: int = 16
    optimality_required: bool = False


@dataclass
class SolveResult:
    config: Configuration
    latency: LatencyBreakdown
    optimal: bool
    gap: float
    method: str
    stats: dict = field(default_factory=dict)


# --- JSON interchange ---------------------------------------------------------


def config_to_dict(
    config: Configuration,
    latency: LatencyBreakdown | None = None,
    optimal: bool = False,
    gap: float = 0.0,
) -> dict:
    committees = []
    active = config.active_by_leader()
    members = config.committees()
    for leader in config.leaders():
        committees.append(
            {
                "leader": leader,
                "members": members[leader],
                "active": active[leader],
                "sigma": 1 if config.fallback_flags.get(leader) else 0,
            }
        )
    doc = {
        "p": config.committee_count,
        "committees": committees,
        "optimal": bool(optimal),
        "gap": float(gap),
    }
    if latency is not None:
        doc["latency"] = latency.as_ms_dict()
    return doc


def config_from_dict(doc: dict) -> Configuration:
    leader_of: dict[int, int] = {}
    links: set[tuple[int, int]] = set()
    flags: dict[int, bool] = {}
    for entry in doc["committees"]:
        leader = int(entry["leader"])
        leader_of[leader] = leader
        for m in entry["members"]:
            leader_of[int(m)] = leader
        for a in entry["active"]:
            links.add((leader, int(a)))
        flags[leader] = bool(entry.get("sigma", 0))
    return Configuration(
        leader_of=leader_of,
        active_links=frozenset(links),
        fallback_flags=flags,
        committee_count=int(doc["p"]),
    )


def latency_from_dict(doc: dict) -> LatencyBreakdown:
    return LatencyBreakdown(
        t_pre=ms_to_us(doc["t_pre"]),
        t_cv=ms_to_us(doc["t_cv"]),
        t_ver=ms_to_us(doc["t_ver"]),
        t_vc=ms_to_us(doc["t_vc"]),
        t_com=ms_to_us(doc["t_com"]),
    )


def save_result(result: SolveResult, path: str | Path) -> None:
    doc = config_to_dict(result.config, result.latency, result.optimal, result.gap)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path: str | Path) -> Configuration:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
