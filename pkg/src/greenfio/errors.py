"""Exception types shared across the toolkit."""


class GreenfioError(Exception):
    """Base class for all toolkit errors."""


class TagError(GreenfioError):
    """Composition requested between order classes whose relation tags do not compose."""


class DomainError(GreenfioError):
    """A parameter is outside the range where the construction is defined."""


class PositivityError(GreenfioError):
    """Conductivity model failed the ellipticity lower bound."""


class WindowError(GreenfioError):
    """Localization window does not equal one near the interface."""


class ReconstructionError(GreenfioError):
    """Round trip through the oscillatory representation missed its tolerance."""


class ConstantError(GreenfioError):
    """Cutoff constants violate their required ordering."""


class QuadratureError(GreenfioError):
    """Numerical integration failed to converge under refinement."""


class SupportError(GreenfioError):
    """Critical point fell outside the amplitude support."""


class HessianError(GreenfioError):
    """Phase Hessian determinant is not of unit modulus."""


class GridError(GreenfioError):
    """Incompatible sampling grids."""


class NumericsError(GreenfioError):
    """Non-finite values appeared in a computation."""


class ConvergenceError(GreenfioError):
    """Series expansion used outside its convergence region."""


class DecompositionError(GreenfioError):
    """Amplitude pieces failed to sum back to the whole."""


class InvalidPointError(GreenfioError):
    """Point violates the defining constraints of its set."""


class ConfigError(GreenfioError):
    """Experiment configuration failed validation."""
