"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates an operation's contract (dimension/shape/index)."""


class ProtocolError(RuntimeError):
    """A message expected by the slot protocol is missing or inconsistent.

    Delays are deterministic, so this always indicates a driver bug rather
    than a runtime condition to recover from.
    """


class ConvergenceError(RuntimeError):
    """An iterative solver exceeded its iteration cap.

    Carries diagnostics in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""
