"""Work limits for exhaustive operations."""
from .errors import BudgetExceeded

# q^n-style enumeration sizes above this are refused unless a caller raises it
EXHAUSTIVE_BUDGET = 1 << 28


def check_budget(what: str, cost: int, budget: int | None = None) -> None:
    if budget is None:
        budget = EXHAUSTIVE_BUDGET
    if cost > budget:
        raise BudgetExceeded(what, int(cost), int(budget))
