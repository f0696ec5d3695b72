"""Shared exception types.

The CLI maps these onto exit codes: invalid input / domain violations exit
with 2, numerical-integrity failures with 3, budget overruns with 4.
"""


class DomainError(ValueError):
    """An argument lies outside the operation's stated domain."""


class PreconditionError(ValueError):
    """A stated precondition (beyond simple argument ranges) is violated."""


class UnsupportedFamilyError(ValueError):
    """The rate-function or profile family carries no symbolic data for this test."""


class DivergenceError(ValueError):
    """An improper integral diverges; ``lower_bound`` holds a partial mass."""

    def __init__(self, message: str, lower_bound: float = float("inf")):
        super().__init__(message)
        self.lower_bound = lower_bound


class NumericalIntegrityError(ArithmeticError):
    """A computed value violates an exact invariant beyond numerical tolerance."""


class BudgetExceededError(RuntimeError):
    """A solver budget was exceeded; ``max_affordable`` holds the reachable limit."""

    def __init__(self, message: str, max_affordable: float | None = None):
        super().__init__(message)
        self.max_affordable = max_affordable
