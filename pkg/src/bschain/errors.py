"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter value violates its documented constraint."""


class ProfileError(ValueError):
    """An initial profile is inadmissible (non-positive variance somewhere)."""

    def __init__(self, message: str, site=None):
        super().__init__(message)
        self.site = site


class StencilWrapError(ValueError):
    """Torus too small for the near-diagonal correlation stencil (needs N >= 5)."""


class IntegratorError(RuntimeError):
    """Step halving hit the step floor before reaching the requested tolerance."""

    def __init__(self, message: str, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(RuntimeError):
    """Spectral tail mass above threshold; a larger mode cutoff is needed."""


class SimulationDivergedError(RuntimeError):
    """Non-finite values appeared in a chain state. Indicates a bug upstream."""


class NumericalConsistencyError(RuntimeError):
    """An internal cross-check failed (imaginary residue, negative norm, ...)."""


class DependencyMissingError(RuntimeError):
    """Required precomputed inputs (walk laws, source paths) were not supplied."""


class BudgetError(RuntimeError):
    """Projected work exceeds the configured operation ceiling."""


class ConfigError(ValueError):
    """An experiment spec failed validation. The message carries the field path."""
