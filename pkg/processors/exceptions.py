"""
Exceptions - Error types raised by the numerical core

Input problems derive from ValidationError (a ValueError); mathematically
degenerate instances derive from DegenerateInstance (an ArithmeticError).
The CLI maps the two families onto exit codes 2 and 3.
"""


class SkewBoundError(Exception):
    """Root of every error raised by this package"""


class ValidationError(SkewBoundError, ValueError):
    """Input failed validation"""


class NonFinite(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class OrderTooLarge(ValidationError):
    pass


class OddOrder(ValidationError):
    pass


class OddOrderSum(ValidationError):
    pass


class MissingMoment(ValidationError):
    pass


class DegenerateInstance(SkewBoundError, ArithmeticError):
    """Instance is valid but the requested quantity does not exist for it"""


class ZeroFisherInformation(DegenerateInstance):
    """[H, rho] = 0: the curve is stationary and carries no information"""


class RankSaturated(DegenerateInstance):
    """The odd derivative frame lost linear independence"""

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class DegenerateSurface(DegenerateInstance):
    pass


class InvalidGeometry(DegenerateInstance):
    pass


class IncompleteFrame(DegenerateInstance):
    pass
