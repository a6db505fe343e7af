"""Exception hierarchy for collapsesim.

Two branches matter for the CLI exit-code contract: ``InputError`` subclasses
signal bad user input (config/arguments, exit code 1) while
``RuntimeFailure`` subclasses signal a failure during an otherwise valid run
(exit code 2).
"""

__all__ = [
    "CollapseSimError",
    "InputError",
    "RuntimeFailure",
    "NegativeEntry",
    "SumNotOne",
    "EmptyVector",
    "DimensionMismatch",
    "OutOfRange",
    "InvalidGeneration",
    "EmptyTrainingSet",
    "NoCollapsedReplicates",
    "ShapeMismatch",
    "EmptyContext",
    "NonConvergence",
    "InfeasibleTarget",
    "ParseError",
    "ValidationError",
    "UnknownFigure",
    "BackendUnavailable",
]


class CollapseSimError(Exception):
    """Base class for all collapsesim errors."""


class InputError(CollapseSimError):
    """Invalid user-supplied input (CLI exit code 1)."""


class RuntimeFailure(CollapseSimError):
    """Failure while executing a structurally valid request (CLI exit code 2)."""


class NegativeEntry(InputError):
    """A probability vector contains a negative entry."""


class SumNotOne(InputError):
    """A probability vector does not sum to one within tolerance."""


class EmptyVector(InputError):
    """A probability vector has no entries."""


class DimensionMismatch(InputError):
    """Two vectors that must share a dimension do not."""


class OutOfRange(InputError):
    """A scalar parameter violates its documented domain."""


class InvalidGeneration(InputError):
    """A generation index outside the valid range was requested."""


class EmptyTrainingSet(RuntimeFailure):
    """A generation would be trained on zero samples."""


class NoCollapsedReplicates(RuntimeFailure):
    """Collapse statistics requested but no replicate collapsed."""


class ShapeMismatch(InputError):
    """An array argument has the wrong shape."""


class EmptyContext(InputError):
    """A token dataset row has no samples for a queried context."""


class NonConvergence(RuntimeFailure):
    """Gradient descent stopped at the iteration cap above tolerance."""

    def __init__(self, message: str, final_gradient_norm: float):
        super().__init__(message)
        self.final_gradient_norm = final_gradient_norm


class InfeasibleTarget(InputError):
    """No distribution exists for the requested (support, sigma) target."""


class ParseError(InputError):
    """A config or table file is syntactically malformed."""


class ValidationError(InputError):
    """A parsed config is semantically invalid."""


class UnknownFigure(InputError):
    """An unknown figure id was passed to reproduce-fig."""


class BackendUnavailable(InputError):
    """The requested compute backend is not importable."""
