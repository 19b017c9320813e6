"""Exception types shared across the package."""


class DppError(Exception):
    """Base class for errors raised by this library."""


class NotPSDError(DppError, ValueError):
    """A matrix eigenvalue is too negative to be round-off."""


class InfeasibleError(DppError, ValueError):
    """The requested subset size cannot be realized by the spectrum."""


class ConvergenceError(DppError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class DegenerateError(DppError, ValueError):
    """A quantity a formula divides by (or takes a log of) vanished."""


class BudgetError(DppError, ValueError):
    """A brute-force enumeration would exceed the subset budget guard."""
