"""Exception hierarchy for scalelab."""


class ScalelabError(Exception):
    """Base class for all scalelab errors."""


class InvalidDensityError(ScalelabError, ValueError):
    pass


class InvalidScalingError(ScalelabError, ValueError):
    pass


class QuadratureError(ScalelabError):
    pass


class UnsupportedPathError(ScalelabError):
    pass


class SingularPointError(ScalelabError, ValueError):
    pass


class InvalidPerturbationError(ScalelabError, ValueError):
    pass


class FitError(ScalelabError):
    pass


class NearZeroFunctionalError(FitError):
    pass


class DegenerateFitError(FitError):
    """Raised when the affine fit p(m) = q*m + k has |q| below tolerance.

    The partially filled result is available as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DegreeError(ScalelabError, ValueError):
    """p(m) vanishes, so a relation dividing by it is undefined."""


class InvalidSampleError(ScalelabError, ValueError):
    pass


class DegenerateReferenceError(ScalelabError):
    pass


class ConfigError(ScalelabError, ValueError):
    pass
