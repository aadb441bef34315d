"""Exception hierarchy shared by all modules."""


class NodalLabError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(NodalLabError, ValueError):
    """Invalid configuration or model parameters."""


class ModelError(NodalLabError):
    """The covariance model cannot deliver the requested quantity."""


class UsageError(NodalLabError, ValueError):
    """An operation was called outside its preconditions."""


class DecompositionError(NodalLabError):
    """A constructed curve hierarchy failed one of its postconditions.

    Carries the offending node so the failure can be inspected; this signals
    a bug in the construction, not a property of the input curve.
    """

    def __init__(self, message, node=None, diagnostics=None):
        super().__init__(message)
        self.node = node
        self.diagnostics = diagnostics if diagnostics is not None else {}
