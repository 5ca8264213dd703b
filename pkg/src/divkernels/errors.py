"""Exception hierarchy shared by all modules."""


class DivKernelsError(Exception):
    """Base class; ``kind`` names the failure in CLI error reports."""

    kind = "error"


class ArgumentError(DivKernelsError, ValueError):
    kind = "argument-error"


class DomainError(DivKernelsError, ValueError):
    kind = "domain-error"


class DegenerateAnchorError(DivKernelsError):
    kind = "degenerate-anchor"


class DiagonalError(DivKernelsError, ValueError):
    kind = "diagonal-error"


class SequenceDegenerateError(DivKernelsError):
    kind = "sequence-degenerate"


class EmptySpaceError(DivKernelsError):
    kind = "empty-space"


class StrongDivisionViolated(DivKernelsError):
    kind = "strong-division-violated"


class WeakDivisionViolated(DivKernelsError):
    kind = "weak-division-violated"


class NearSpectrumError(DivKernelsError):
    """Resolvent requested too close to the spectrum."""

    kind = "near-spectrum"

    def __init__(self, msg, nearest=None, cond=None):
        super().__init__(msg)
        self.nearest = nearest
        self.cond = cond


class PreconditionError(DivKernelsError):
    kind = "precondition-error"


class NumericError(DivKernelsError):
    kind = "numeric-error"


class NotAProjectionError(DivKernelsError):
    kind = "not-a-projection"


class CapacityError(DivKernelsError):
    kind = "capacity-error"


class IllConditionedError(DivKernelsError):
    kind = "ill-conditioned"


class PoleError(DivKernelsError, ZeroDivisionError):
    kind = "pole-error"


class ConsistencyError(DivKernelsError):
    kind = "consistency-error"


class RefinementWarning(UserWarning):
    """Quadrature refinement did not settle to the requested tolerance."""
