"""Error types shared by the library and the management commands."""


class RadioError(Exception):
    """Base class for every error raised by the amc package."""


class InvalidInputError(RadioError, ValueError):
    """A frame, dataset or batch does not satisfy an operation's precondition."""


class DegenerateInputError(InvalidInputError):
    """Input is well-formed but degenerate (all-zero frame, empty stratum)."""


class ClassTableMismatchError(InvalidInputError):
    """A model and a dataset disagree on the class table."""


class InvalidArgumentError(RadioError, ValueError):
    """An option, policy name, class name or config value is not valid."""


class DataFormatError(RadioError):
    """An RSIG or RMDL file could not be decoded."""


class InvariantViolation(RadioError):
    """An internal consistency check failed."""
