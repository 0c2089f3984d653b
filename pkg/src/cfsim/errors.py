"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for errors raised by the simulator."""


class ConfigError(SimulationError):
    """Invalid configuration file, key, or value."""


class SingularChannelError(SimulationError):
    """Channel matrix is rank deficient or too ill-conditioned to invert."""


class NumericalError(SimulationError):
    """A numerical operation produced a non-finite or unusable result."""


class ResourceCapError(SimulationError):
    """A configured resource cap (e.g. exhaustive-search size) was exceeded."""


class PowerBudgetError(SimulationError):
    """A precoder violates the Frobenius-norm power budget."""


class DegenerateScalingError(SimulationError):
    """Power rescaling requested for an all-zero amplitude vector."""
