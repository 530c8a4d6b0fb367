"""Reconfiguration after TEE failures."""
from __future__ import annotations

from ..model import Instance
from .config import Configuration, SolveLimits, SolveResult
from .objective import derive_fallback_flags, evaluate, optimal_links


def reoptimize_fallback(
    instance: Instance,
    failed: set[int] | frozenset[int],
    previous: Configuration,
    limits: SolveLimits | None = None,
    repartition: bool = True,
    seed: int = 0,
    iteration_budget: int = 4000,
) -> SolveResult:
    """New configuration after the given nodes lost their trusted counters.

    With repartition disabled the previous membership is kept: only the
    fallback flags flip and the active links are re-picked (each affected
    committee now needs 3f of them). With repartition enabled the updated
    instance is re-solved from scratch, exact when it fits under the node cap.
    """
    limits = limits or SolveLimits()
    updated = instance.with_tee_failures(set(failed))
    if not repartition:
        flags = derive_fallback_flags(updated, previous.leader_of)
        links = optimal_links(updated, previous.leader_of, flags)
        config = Configuration(
            leader_of=dict(previous.leader_of),
            active_links=links,
            fallback_flags=flags,
            committee_count=previous.committee_count,
        )
        latency = evaluate(updated, config)
        from .exact import global_lower_bound

        lb = global_lower_bound(updated)
        gap = max(0.0, (latency.t_tr - lb) / latency.t_tr) if latency.t_tr else 0.0
        return SolveResult(
            config=config,
            latency=latency,
            optimal=False,
            gap=gap,
            method="fallback-in-place",
        )
    if updated.n <= limits.node_cap_exact:
        from .exact import solve_exact

        result = solve_exact(updated, limits)
    else:
        from .heuristic import solve_heuristic

        result = solve_heuristic(updated, seed=seed, iteration_budget=iteration_budget)
    result.method = f"fallback-{result.method}"
    return result
