"""Exception types shared across the package."""


class InputError(ValueError):
    """Arguments violate an operation's preconditions."""


class DomainError(ArithmeticError):
    """A requested quantity is infinite or undefined (divergent moment or integral)."""


class ResourceError(RuntimeError):
    """The requested computation exceeds a memory or enumeration budget."""


class AnalyticTailUnavailable(LookupError):
    """The model has no closed-form tail; use an empirical tail from simulation."""
