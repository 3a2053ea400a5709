"""
Exception hierarchy
Every library error is a ValueError so command code can catch one family
"""


class UniformLiftError(ValueError):
    """Base class for all errors raised by the models package"""


class MarginalError(UniformLiftError):
    """Invalid one-dimensional distribution function"""


class ProcessError(UniformLiftError):
    """Invalid finite-state process description"""


class ReducibleChainError(ProcessError):
    """Transition matrix is not irreducible"""


class PeriodicChainError(ProcessError):
    """Transition matrix is irreducible but periodic"""


class SupportError(UniformLiftError):
    """
    Value outside the support of its marginal
    index and coordinate locate the offending entry of a path
    """

    def __init__(self, message: str, index: int = None, coordinate: int = None, value: float = None):
        super().__init__(message)
        self.index = index
        self.coordinate = coordinate
        self.value = value


class CylinderError(UniformLiftError):
    """Cylinder factor incompatible with the atom-interval partition"""


class SizeCapError(UniformLiftError):
    """Exhaustive computation would exceed the configured size cap"""


class DecayError(UniformLiftError):
    """Series terms do not decay geometrically"""


class GridError(UniformLiftError):
    """Grids of mismatched shape or invalid ordering"""


class InsufficientSamplesError(UniformLiftError):
    """Too few samples for a Monte Carlo estimate"""


class ConfigError(UniformLiftError):
    """Invalid run configuration"""
