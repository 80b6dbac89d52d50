class DivergenceError(FloatingPointError):
    """A training loss or gradient became non-finite."""


class InfeasibleActionError(ValueError):
    """A bandwidth allocation violates the sum or floor constraint."""
