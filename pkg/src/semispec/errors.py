"""Exception hierarchy.

Each family carries the CLI exit code it maps to, so the command layer never
has to guess: configuration problems exit 1, regime violations exit 2 and
numerical failures exit 3.
"""


class SemispecError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    kind = "error"

    def to_dict(self):
        out = {"error": self.kind, "message": str(self)}
        out.update(getattr(self, "details", {}) or {})
        return out


class ConfigError(SemispecError):
    """Invalid configuration or invalid argument."""

    kind = "config"


class ParseError(ConfigError):
    """Syntax or semantic error in a potential expression.

    ``offset`` is the byte offset into the source text.
    """

    kind = "parse"

    def __init__(self, message, offset, text=""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text
        self.details = {"offset": offset}


class RegimeError(SemispecError):
    """The potential/domain pair violates the hypotheses of the asymptotic regime."""

    exit_code = 2
    kind = "regime"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class NumericalError(SemispecError):
    exit_code = 3
    kind = "numerical"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class InfeasibleResolutionError(NumericalError):
    """Resolving the requested h would exceed the grid cap."""

    kind = "infeasible_resolution"

    def __init__(self, message, smallest_feasible_h=None, **details):
        super().__init__(message, smallest_feasible_h=smallest_feasible_h, **details)
        self.smallest_feasible_h = smallest_feasible_h


class InstabilityError(NumericalError):
    """Leftmost eigenvalue does not persist under grid refinement."""

    kind = "instability"


class EigenvalueHitError(NumericalError):
    """A resolvent was requested at (numerically) an eigenvalue."""

    kind = "eigenvalue_hit"


class StripViolationError(RegimeError):
    """Eigenvalues found inside a strip that was supposed to be free of them."""

    kind = "strip_violation"
