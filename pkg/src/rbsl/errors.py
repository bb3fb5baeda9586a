class RBSLError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(RBSLError, ValueError):
    pass


class NumericalError(RBSLError, ArithmeticError):
    pass


class ConfigurationError(RBSLError, ValueError):
    pass


class SimulationError(RBSLError, RuntimeError):
    """A model simulation produced an unusable summary."""


class DegenerateSummaryError(SimulationError):
    pass


class DegenerateSampleError(RBSLError, RuntimeError):
    pass


class SliceSamplerError(RBSLError, RuntimeError):
    pass
