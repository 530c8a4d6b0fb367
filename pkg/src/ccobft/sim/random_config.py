"""The random "default scheme" configuration used as an experiment baseline."""
from __future__ import annotations

import random

from ..cco.config import Configuration
from ..cco.objective import eligible_leaders
from ..errors import InfeasibleInstanceError
from ..model import Instance, validate_instance


def random_configuration(
    instance: Instance, seed: int, fallback_all: bool = False
) -> Configuration:
    """Randomly partition into minimum-size committees with random leaders.

    Nodes are shuffled and cut into committees of 3f+1, the remainder spread
    round-robin. Leaders are drawn uniformly from each committee's eligible
    nodes and active links uniformly among followers, never by cost; this is
    the uninformed baseline, not an optimizer. With fallback_all every
    committee is flagged and all followers are active.
    """
    problems = validate_instance(instance)
    if problems:
        raise InfeasibleInstanceError("; ".join(problems))
    f = instance.params.f
    size = instance.min_committee_size
    count = instance.max_committees
    if count < 1:
        raise InfeasibleInstanceError(
            f"{instance.n} nodes cannot form a committee of {size}"
        )
    eligible = set(eligible_leaders(instance))
    if not eligible:
        raise InfeasibleInstanceError("no node satisfies the leader rate caps")
    rng = random.Random(seed)
    nodes = list(range(instance.n))
    # A committee with no eligible leader forces a reshuffle; the caps make
    # this rare, so a bounded retry is enough.
    for _ in range(1000):
        rng.shuffle(nodes)
        groups = [nodes[i * size : (i + 1) * size] for i in range(count)]
        for offset, leftover in enumerate(nodes[count * size :]):
            groups[offset % count].append(leftover)
        if all(eligible.intersection(group) for group in groups):
            break
    else:
        raise InfeasibleInstanceError("could not place an eligible leader everywhere")

    tee = instance.tee_flags()
    leader_of: dict[int, int] = {}
    flags: dict[int, bool] = {}
    links: set[tuple[int, int]] = set()
    for group in groups:
        leader = rng.choice(sorted(eligible.intersection(group)))
        for member in group:
            leader_of[member] = leader
        followers = [m for m in group if m != leader]
        sigma = fallback_all or any(tee[m] for m in group)
        flags[leader] = bool(sigma)
        need = (2 + int(sigma)) * f
        if fallback_all:
            chosen = followers
        else:
            chosen = rng.sample(sorted(followers), need)
        links.update((leader, j) for j in chosen)
    return Configuration(
        leader_of=leader_of,
        active_links=frozenset(links),
        fallback_flags=flags,
        committee_count=count,
    )
