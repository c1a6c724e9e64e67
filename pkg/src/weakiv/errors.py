"""Exception hierarchy.

Validation errors (bad user input) map to CLI exit code 2; numerical
errors (factorization failures, solver breakdowns) map to exit code 1.
"""


class WeakIvError(Exception):
    """Base class for all library errors."""


class ValidationError(WeakIvError):
    """Malformed input: schema violations, bad argument values."""


class InvalidInput(ValidationError):
    """An argument is outside its documented domain."""


class InvalidWeight(ValidationError):
    """CLC weight outside [0, 1]."""


class DimensionMismatch(ValidationError):
    """Array shape inconsistent with the declared instrument count."""


class NumericalError(WeakIvError):
    """Base class for runtime numerical failures."""


class NonPositiveDefinite(NumericalError):
    """A matrix required to be SPD failed the eigenvalue tolerance check."""


class SingularMap(NumericalError):
    """The stacked (S, T) reconstruction map is numerically singular."""


class DegenerateDirection(NumericalError):
    """The LM projection direction has vanishing norm (T numerically zero)."""


class DegenerateDenominator(NumericalError):
    """A drift/limit formula denominator vanished."""


class DegenerateGamma(NumericalError):
    """The fixed-alternative variance direction vector has vanishing norm."""


class InsufficientDraws(NumericalError):
    """Too few Monte-Carlo draws for the requested quantile index."""


class NoRootFound(NumericalError):
    """The scalar constraint scan found no admissible multiplier."""


class SingularFoc(NumericalError):
    """A first-order-condition solve collided with a pole without a
    consistent null-space completion."""


class Infeasible(NumericalError):
    """No scaling satisfies the confidence-set constraint."""
