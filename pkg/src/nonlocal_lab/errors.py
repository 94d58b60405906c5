"""Exception types shared across the package."""


class InputError(ValueError):
    """A caller passed an argument outside an operation's domain."""


class ConsistencyError(RuntimeError):
    """An internal invariant was violated (a model or solver bug)."""
