"""Exception types raised by the solvers.

Validation problems derive from ``ValidationError``; numerical breakdowns
derive from ``NumericalFailure``. The CLI maps these to exit codes 2 and 3.
"""


class PlateError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PlateError, ValueError):
    """Invalid user input (geometry, parameters, configuration)."""


class NumericalFailure(PlateError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""


class ThresholdWavenumber(ValidationError):
    """k coincides with a threshold, where radiation conditions degenerate."""


class NotAnEigenvalue(ValidationError):
    """The supplied lambda does not make the dispersion matrix singular."""


class DegenerateKernel(NumericalFailure):
    """The dispersion matrix vanishes: the kernel is two-dimensional."""

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.dimension = 2
        self.basis = basis


class NearSingularSymbol(NumericalFailure):
    """The discrete transverse symbol is too ill-conditioned to invert."""


class ContourThroughZero(NumericalFailure):
    """An argument-principle contour passes through a zero."""


class Inconclusive(NumericalFailure):
    """Multiplicity could not be decided above the noise floor."""


class SingularSystem(NumericalFailure):
    """Sparse factorization failed or left a large residual."""


class CutoffOverlapsHole(ValidationError):
    """The transition band of the lifting cut-off meets the hole."""


class EigenvalueNearContour(NumericalFailure):
    """A modal exponent sits too close to the inverse-transform line."""


class MultiplicityTwo(NumericalFailure):
    """A residue was requested at a double exponent (threshold case)."""


class NotPropagating(ValidationError):
    """The requested mode index does not propagate at this k."""


class ContinuationLost(NumericalFailure):
    """Newton continuation left its trust region."""
