"""Shared error types for the evolution modules."""


class BlowUpError(RuntimeError):
    """Raised when an evolution produces non-finite or runaway values.

    Carries the last finite state and any partial trajectory so callers can
    report diagnostics instead of losing the run.
    """

    def __init__(self, message, last_state=None, partial=None):
        super().__init__(message)
        self.last_state = last_state
        self.partial = partial


class InvariantError(RuntimeError):
    """Raised when a declared invariant check fails at runtime."""
