"""Exception hierarchy shared by all mixnorm modules."""


class MixnormError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(MixnormError, ValueError):
    pass


class NotSymmetric(MixnormError, ValueError):
    pass


class NotPositiveDefinite(MixnormError, ValueError):
    pass


class RankDeficient(MixnormError, ValueError):
    pass


class DomainError(MixnormError, ValueError):
    pass


class NoDensity(MixnormError, ValueError):
    """Raised when a density is requested from an atomic mixing law."""


class KindShapeMismatch(MixnormError, ValueError):
    """Shape vector supplied for VMN, or missing for MMN/MVMN."""


class SupportMismatch(MixnormError, ValueError):
    pass


class UnsupportedCombination(MixnormError, ValueError):
    pass


class DegenerateShape(MixnormError, ValueError):
    pass


class NumericalUnderflow(MixnormError, ArithmeticError):
    pass


class NonFiniteIntegrand(MixnormError, ArithmeticError):
    pass


class ToleranceNotMet(MixnormError, ArithmeticError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate is attached so callers can decide whether
    it is good enough.
    """

    def __init__(self, message, value=float("nan"), err_estimate=float("inf")):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate


class SingularScatter(MixnormError, ArithmeticError):
    """An EM M-step produced a scale matrix that is not positive definite."""


class DegenerateGIG(MixnormError, ArithmeticError):
    pass


class ParseError(MixnormError, ValueError):
    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        prefix = f"{', '.join(loc)}: " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class DivergentMoment(MixnormError, ArithmeticError):
    """A requested expectation is infinite or undefined."""
