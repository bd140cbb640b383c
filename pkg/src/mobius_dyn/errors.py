"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (e.g. inverting zero)."""


class UnsupportedError(ValueError):
    """The operation is not defined for this kind of input (e.g. p = 2, parabolic maps)."""


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed its configured work budget."""

    def __init__(self, what, needed, budget):
        self.what = what
        self.needed = needed
        self.budget = budget
        super().__init__(f"{what}: needs {needed} units of work, budget is {budget}")
