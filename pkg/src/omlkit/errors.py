"""Exception hierarchy shared by all omlkit modules."""


class OmlError(Exception):
    """Base class for every error raised by omlkit."""


class MalformedInput(OmlError):
    """Input data has inconsistent dimensions or out-of-range indices."""


class ValidationFailed(OmlError):
    """A candidate structure violates a lattice axiom.

    Carries the ValidationReport in .report when raised by validate_oml.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CapExceeded(OmlError):
    """A configured size cap would be exceeded by the requested computation."""


class InternalInvariantViolation(OmlError):
    """A result failed a self-check; indicates a bug, not a user error."""


class NotBoolean(OmlError):
    """An operation required a Boolean algebra but the input is not one."""


class MalformedDiagram(OmlError):
    """A Greechie diagram violates the diagram invariants."""


# parse_greechie reports the same class of defects under this name.
InvalidDiagram = MalformedDiagram


class NotPastable(OmlError):
    """A Greechie diagram does not paste to an orthomodular lattice.

    Carries the failed ValidationReport in .report when validation produced one.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class Infeasible(OmlError):
    """A state-extension system has no solution; carries the LP certificate."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class PreconditionViolated(OmlError):
    """An operation was called outside its stated precondition."""


class ParseError(OmlError):
    """A text input could not be parsed; .line holds the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line
