"""Exception types shared across the package."""


class NsfdeError(Exception):
    """Base class for all package errors."""


class ConfigError(NsfdeError, ValueError):
    """Invalid configuration value or file; the message names the offending key."""


class DomainError(NsfdeError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(NsfdeError, ValueError):
    """Mode-vector or grid shape mismatch."""


class EllipticityError(ConfigError):
    """Diffusivity is not strictly positive on the sampling grid."""


class SingularModulusError(DomainError):
    """Continuity modulus vanishes somewhere inside the integration range."""


class BlowupError(NsfdeError, RuntimeError):
    """State norm exceeded the blow-up guard during integration."""


class NonconvergenceError(NsfdeError, RuntimeError):
    """Fixed-point iteration for the implicit neutral term failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
