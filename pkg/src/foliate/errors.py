"""Exception hierarchy shared by every module of the package."""


class FoliateError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(FoliateError, ValueError):
    """Raised when scalar or geometry text does not conform to the grammar."""

    def __init__(self, message, position=None, expected=()):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        detail = message
        if position is not None:
            detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifierError(FoliateError, ValueError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r}")


class EvalError(FoliateError, ArithmeticError):
    """A subterm could not be evaluated (division by zero, ln of x <= 0, ...)."""

    def __init__(self, reason, subterm=None):
        self.reason = reason
        self.subterm = subterm
        where = f" in {subterm}" if subterm is not None else ""
        super().__init__(f"{reason}{where}")


class DimensionMismatchError(FoliateError, ValueError):
    pass


class DegreeMismatchError(FoliateError, ValueError):
    pass


class DegreeMixtureError(FoliateError, ValueError):
    """A geometry expression adds terms of different degree or variance."""


class SingularFrameError(FoliateError):
    pass


class RankDeficientError(FoliateError):
    pass


class VerificationFailed(FoliateError):
    """A construction did not satisfy its defining identity at sample points."""

    def __init__(self, message, result=None):
        self.result = result
        if result is not None:
            message = f"{message}: max residual {result.max_abs_residual:.3e}"
        super().__init__(message)


class JacobiFailed(VerificationFailed):
    pass


class SingularSymplecticError(FoliateError):
    pass


class SingularDeltaError(FoliateError):
    def __init__(self, message, worst_point=None):
        self.worst_point = worst_point
        super().__init__(message)


class ConfigError(FoliateError):
    """Invalid manifest; ``location`` is a JSON-pointer-style path."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location or '/'}: {message}")
