"""Exception hierarchy shared by every module in the package."""


class SpinGlassError(Exception):
    """Base class for all errors raised by spinmple."""


class InvalidSize(SpinGlassError, ValueError):
    pass


class DegenerateGraph(SpinGlassError):
    """A random graph draw kept failing the non-degeneracy checks."""


class ParseError(SpinGlassError, ValueError):
    pass


class SelfLoop(ParseError):
    pass


class DuplicateEdge(ParseError):
    pass


class ConstructionFailed(SpinGlassError):
    """A certified combinatorial construction could not be verified.

    This signals a bug rather than an expected outcome.
    """


class TooLarge(SpinGlassError, ValueError):
    """Exhaustive enumeration requested above the hard size cap."""


class NonExistence(SpinGlassError):
    """No existence witness was found for the pseudolikelihood maximizer."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InsufficientData(SpinGlassError, ValueError):
    pass
