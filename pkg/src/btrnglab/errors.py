"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all package-specific errors."""


class WidthError(LabError):
    """An operand does not have the required byte width."""


class ConfigurationError(LabError):
    """A component was configured into an unsupported state."""


class DistributionFormatError(LabError):
    """A distribution file failed to parse.

    Carries line number context when available.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ValidationError(LabError):
    """Parsed data violates an invariant (e.g. a negative weight)."""


class ProtocolLimitError(LabError):
    """A simulated transport request exceeds the protocol's limit."""


class AddressRangeError(LabError):
    """A simulated memory access falls outside the mapped buffer."""


class FramingError(LabError):
    """A byte stream does not divide into whole records."""


class CorruptionError(LabError):
    """A check byte mismatch; records the first bad record index."""

    def __init__(self, message, record_index):
        super().__init__(message)
        self.record_index = record_index


class InsufficientDataError(LabError):
    """Not enough input for the requested analysis."""


class AmbiguityError(LabError):
    """More than one candidate passed a uniqueness check."""
