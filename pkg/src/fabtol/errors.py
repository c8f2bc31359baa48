"""Exception types raised across the package."""


class FabTolError(Exception):
    """Base class for all model and runtime errors."""


class OutOfRange(FabTolError, ValueError):
    """A wavelength or width lies outside the validity window of a provider."""


class UnknownPolarization(FabTolError, KeyError):
    pass


class EnergyConservationError(FabTolError, ValueError):
    pass


class DegenerateNoPoling(FabTolError):
    """The process is already phasematched, no grating period can be defined."""


class DegenerateEverywhereCritical(FabTolError):
    """The sensitivity vanishes on the whole scanned range."""


class InfiniteTolerance(FabTolError):
    """Zero sensitivity: the tolerated fabrication error is unbounded."""


class MeshTooCoarse(FabTolError, ValueError):
    pass


class WidthWindowExceeded(FabTolError, ValueError):
    pass


class UpsampleOnly(FabTolError, ValueError):
    pass


class MissingPeriod(FabTolError):
    pass


class AxisMismatch(FabTolError, ValueError):
    pass


class EmptySpectrum(FabTolError, ValueError):
    pass


class NoPeak(FabTolError):
    pass


class ConfigError(FabTolError, ValueError):
    """Malformed experiment configuration or command-line input."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = list(keys)
