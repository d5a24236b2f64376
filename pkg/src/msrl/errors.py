class MsrlError(Exception):
    """Base class for all errors raised by msrl."""


class ConfigurationError(MsrlError, ValueError):
    pass


class NumericalDegeneracyError(MsrlError, ArithmeticError):
    pass


class InstabilityError(MsrlError, ArithmeticError):
    """Raised when the explicit integrator blows up.

    ``step_index`` is the index of the offending step when the caller knows it.
    """

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class DivergenceError(MsrlError, ArithmeticError):
    """A learning update produced a non-finite loss."""


class NotReadyError(MsrlError, RuntimeError):
    pass


class WaveformError(MsrlError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
