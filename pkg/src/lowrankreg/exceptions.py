"""Exception hierarchy shared by the library and the command line."""


class InputError(ValueError):
    """Invalid argument: bad shape, non-finite entries, out-of-range parameter."""


class DegenerateDesignError(InputError):
    """The design matrix is zero, so no positive singular value exists."""


class PreconditionError(InputError):
    """A documented precondition of the called routine does not hold."""


class MatrixParseError(InputError):
    """A matrix file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
