"""Exception types shared across the package."""


class JchsimError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(JchsimError, ValueError):
    """Operands act on incompatible Hilbert spaces."""


class ConfigError(JchsimError, ValueError):
    """Invalid experiment configuration (unknown key, bad value, ...)."""


class NumericalError(JchsimError, RuntimeError):
    """A numerical contract was violated (divergent integral, drift, ...)."""


class DegenerateSteadyStateError(NumericalError):
    """The Liouvillian has more than one stationary mode."""
