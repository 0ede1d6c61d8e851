"""Exception types shared across the package."""


class KdvistError(Exception):
    """Base class for all computational errors."""


class IntegrationError(KdvistError):
    """ODE integration failed (step-size underflow or non-convergence)."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class CatalogError(KdvistError):
    """Unknown catalog tag or invalid catalog parameters."""


class ScatteringError(KdvistError):
    """Scattering computation failed (degenerate Wronskian, invalid a, ...)."""


class DiscretizationError(KdvistError):
    """Nystrom discretization is inadequate (decay certificate, positivity)."""


class ResolutionError(KdvistError):
    """A grid or phase-resolution certificate failed."""


class ConfigError(KdvistError):
    """Invalid run configuration."""
