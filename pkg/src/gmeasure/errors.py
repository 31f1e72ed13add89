"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GMeasureError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(GMeasureError, ValueError):
    """Malformed g-function string, context literal, table file or config."""

    exit_code = 2
    kind = "config"


class OutsideSubshift(GMeasureError, ValueError):
    """The symbol is not allowed in front of the given context."""

    kind = "outside-subshift"


class PrecisionUnavailable(GMeasureError, ArithmeticError):
    """Requested tolerance cannot be certified with the available tail bounds."""

    exit_code = 3
    kind = "precision"


class HeavyTail(GMeasureError, ArithmeticError):
    """Unenumerated probability mass stays above the sampling cutoff."""

    exit_code = 3
    kind = "heavy-tail"


class InstanceTooLarge(GMeasureError):
    exit_code = 4
    kind = "too-large"


class NoUniqueSolution(GMeasureError, ArithmeticError):
    """The stationary equations have a nullspace of dimension != 1."""

    exit_code = 3
    kind = "no-unique-solution"

    def __init__(self, nullspace_dim, message=None):
        self.nullspace_dim = nullspace_dim
        super().__init__(message or f"stationary system has nullspace dimension {nullspace_dim}")


class EnvelopeInvalid(GMeasureError, ValueError):
    kind = "envelope-invalid"
