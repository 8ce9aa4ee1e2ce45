"""Exception hierarchy shared across the package."""


class HarmoflowError(Exception):
    """Base class for all package errors."""


class ShapeError(HarmoflowError, ValueError):
    """Array shapes or grid sizes are inconsistent."""


class DataError(HarmoflowError, ValueError):
    """Input data is invalid (non-finite values, negative intensities, ...)."""


class ConfigError(HarmoflowError, ValueError):
    """A configuration value is out of range or unknown."""


class SolverError(HarmoflowError, RuntimeError):
    """An iterative solver could not proceed."""


class CGBreakdown(SolverError):
    """Conjugate gradients met a direction with non-positive curvature."""


class SynthesisError(HarmoflowError, RuntimeError):
    """Synthetic data generation diverged."""
