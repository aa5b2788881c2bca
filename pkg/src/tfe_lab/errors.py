"""Exception hierarchy shared by all modules.

The CLI maps :class:`ParameterError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class TfeLabError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(TfeLabError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(TfeLabError, RuntimeError):
    """A computation failed to converge or left its admissible region."""


class StepSizeUnderflow(NumericalError):
    """Adaptive step shrank below the floating-point resolution of time."""


class NonFiniteState(NumericalError):
    """The vector field or the state became infinite or NaN."""


class NoSignChange(ParameterError):
    """A bracket passed to a root finder does not change sign."""


class MaxIterationsExceeded(NumericalError):
    """An iteration did not reach its tolerance within the allowed budget."""


class QuadratureDivergence(NumericalError):
    """Two refinement levels of a quadrature disagree."""


class AsymmetricMatrix(NumericalError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class ShootingFailure(NumericalError):
    """No admissible root of a shooting function was found."""


class OrbitEscape(NumericalError):
    """A trajectory left every bounded region before settling on an orbit."""
