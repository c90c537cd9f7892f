"""Exception taxonomy shared across the simulator."""


class MimoSimError(Exception):
    """Base class for all simulator errors."""


class InvalidArgumentError(MimoSimError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateLayoutError(MimoSimError):
    """Antenna layout has (near-)coincident elements and cannot be used."""


class SingularMatrixError(MimoSimError):
    """A matrix that must be inverted is singular or numerically unusable.

    Carries a condition-number estimate when one is available.
    """

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class SingularChannelError(MimoSimError):
    """A channel realization is rank deficient (trial should be resampled)."""


class DegeneracyError(MimoSimError):
    """Eigenvalue spectrum has (near-)repeated entries.

    The closed-form eigenvalue densities require a simple spectrum; callers
    should pass the spectrum through ``closed_form.prepare_spectrum`` first.
    """


class NumericFailureError(MimoSimError):
    """A numerical routine failed to reach its accuracy target."""


class ConvergenceFailureError(MimoSimError):
    """An iterative search did not converge; carries the best value found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
