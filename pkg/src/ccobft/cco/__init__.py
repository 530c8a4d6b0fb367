"""Committee configuration optimization: objective, constraints, solvers."""
from .bruteforce import brute_force
from .config import (
    Configuration,
    ConstraintId,
    LatencyBreakdown,
    SolveLimits,
    SolveResult,
    Violation,
    config_from_dict,
    config_to_dict,
    load_config,
    save_result,
)
from .exact import global_lower_bound, solve_exact
from .fallback import reoptimize_fallback
from .heuristic import solve_heuristic
from .objective import (
    check_constraints,
    derive_fallback_flags,
    eligible_leaders,
    evaluate,
    optimal_links,
)

__all__ = [
    "Configuration",
    "ConstraintId",
    "LatencyBreakdown",
    "SolveLimits",
    "SolveResult",
    "Violation",
    "brute_force",
    "check_constraints",
    "config_from_dict",
    "config_to_dict",
    "derive_fallback_flags",
    "eligible_leaders",
    "evaluate",
    "global_lower_bound",
    "load_config",
    "optimal_links",
    "reoptimize_fallback",
    "save_result",
    "solve_exact",
    "solve_heuristic",
]
