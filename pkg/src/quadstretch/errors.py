"""Exception hierarchy shared by all modules."""


class HapticError(Exception):
    """Base class for every error raised by this package."""


class InputError(HapticError, ValueError):
    """Malformed or missing input data."""


class RangeError(InputError):
    """A numeric input lies outside its permitted interval."""


class ContractViolation(HapticError):
    """A caller broke a documented precondition (e.g. unclamped target, wrong dt)."""


class StreamError(InputError):
    """A timestamped stream is empty where it must not be, or not strictly increasing."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CalibrationError(HapticError):
    pass


class ExtrapolationError(RangeError):
    pass


class StaircaseStateError(HapticError):
    pass


class ProtocolError(HapticError):
    pass


class ChecksumError(ProtocolError):
    pass


class SyncError(ProtocolError):
    pass
