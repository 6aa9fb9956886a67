"""Exception hierarchy shared by every module."""


class MfstopError(Exception):
    pass


class ConfigurationError(MfstopError, ValueError):
    pass


class SimulationDivergedError(MfstopError, FloatingPointError):
    """Raised when a path leaves the finite range; carries the offending index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonConvergenceError(MfstopError, RuntimeError):
    """Raised when an iteration exhausts its budget; carries the residual trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConditioningError(MfstopError, ArithmeticError):
    pass


class InstanceTooLargeError(MfstopError, ValueError):
    def __init__(self, message, required_cap=None):
        super().__init__(message)
        self.required_cap = required_cap


class ShapeMismatchError(MfstopError, ValueError):
    pass
