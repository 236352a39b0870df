class ValidationError(ValueError):
    """Input violates a documented precondition."""


class IntegrationUnstable(RuntimeError):
    """A numerical integration drifted off its invariant manifold."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
