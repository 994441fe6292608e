"""Exception types shared across the package."""


class CapacityError(Exception):
    """A requested object exceeds the configured size budget."""


class PlanMismatchError(Exception):
    """A plan does not fit the circuit it is being applied to."""


class CorrectnessError(Exception):
    """Planned and reference executions disagree beyond tolerance."""
