class FFSplineError(Exception):
    """Base class for all errors raised by ffspline."""


class FieldError(FFSplineError, ValueError):
    pass


class DomainError(FFSplineError, ValueError):
    """A point needed by an operation lies outside a function's domain."""


class BudgetExceeded(FFSplineError):
    def __init__(self, what: str, cost: int, budget: int):
        self.what = what
        self.cost = cost
        self.budget = budget
        super().__init__(f"{what}: cost {cost} exceeds budget {budget}")


class SamplingError(FFSplineError):
    """Rejection sampling gave up; carries the measured acceptance."""

    def __init__(self, message: str, attempts: int, accepted: int):
        self.attempts = attempts
        self.accepted = accepted
        super().__init__(f"{message} (accepted {accepted} of {attempts} attempts)")


class SubspaceSearchError(FFSplineError):
    def __init__(self, target_dim: int, reached_dim: int):
        self.target_dim = target_dim
        self.reached_dim = reached_dim
        super().__init__(
            f"no affine subspace of dimension {target_dim} inside X found; "
            f"deepest dimension reached: {reached_dim}"
        )


class ParseError(FFSplineError, ValueError):
    pass
