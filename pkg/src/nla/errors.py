"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class CutoffError(SimulationError):
    """The Fock cutoff cannot represent the requested state to tolerance."""


class TruncationError(SimulationError):
    """An operation would push significant amplitude past the cutoff."""


class ZeroNormError(SimulationError):
    """Operation undefined on a state with (numerically) zero norm or trace."""


class GridError(SimulationError):
    """Phase-space or quadrature grid too coarse or too narrow."""


class ConvergenceError(SimulationError):
    """An iterative computation failed to converge or went non-physical."""


class EstimationError(SimulationError):
    """A sample-based estimate is unstable or ill-defined."""


class ConfigError(SimulationError):
    """Invalid experiment configuration."""
