"""Exception hierarchy shared by the simulation modules."""


class WeylabError(Exception):
    """Base class; ``code`` is the short token printed by the CLI."""

    code = "error"


class DomainError(WeylabError, ValueError):
    code = "domain"


class AccuracyError(WeylabError, ArithmeticError):
    code = "accuracy"


class NodeError(WeylabError, ArithmeticError):
    """Raised when the guidance field is queried at (or driven into) a node.

    ``trajectory`` holds the partial path when raised mid-integration.
    """

    code = "node"

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class UndecidedError(WeylabError):
    """Which-way label cannot be decided (backward path ends on the slit axis)."""

    code = "undecided"


class NoBracketError(WeylabError, ValueError):
    code = "no-bracket"
