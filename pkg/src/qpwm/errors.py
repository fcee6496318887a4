"""Exception hierarchy shared by all qpwm modules."""


class QpwmError(Exception):
    """Base class for every error raised by qpwm."""


class RangeError(QpwmError, IndexError):
    """An index (position, PWM index, register value) is out of range."""


class DegenerateInputError(QpwmError, ValueError):
    """Input for which the requested quantity is undefined (e.g. a constant PWM set)."""


class PreconditionError(QpwmError, ValueError):
    """A documented precondition of an operation does not hold."""


class FormatMismatchError(QpwmError, TypeError):
    """Fixed-point operands carry different formats."""


class ResourceError(QpwmError, MemoryError):
    """A configured size cap (state size, distribution support) would be exceeded."""


class CapacityError(QpwmError):
    """The exclusion table has no free slot; the kappa = O(1) assumption fails."""


class ParseError(QpwmError, ValueError):
    """Malformed input file. Carries an optional line/column location."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.line = line
        self.column = column
