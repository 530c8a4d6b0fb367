"""Exception types shared across the package."""


class CcobftError(Exception):
    pass


class InfeasibleInstanceError(CcobftError):
    """No configuration can satisfy the instance's constraints."""


class InfeasibleConfigurationError(CcobftError):
    """A configuration failed constraint checking; carries the violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ", ".join(str(v) for v in self.violations[:4])
        more = "" if len(self.violations) <= 4 else f" (+{len(self.violations) - 4} more)"
        super().__init__(f"infeasible configuration: {lines}{more}")


class SolveTimeoutError(CcobftError):
    """Time budget exhausted before any incumbent was proven or found."""
