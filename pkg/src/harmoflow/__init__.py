"""Time-harmonic optical flow: amplitude reconstruction for periodically oscillating image sequences."""

from .core import (
    Grid,
    HarmonicParams,
    SolverConfig,
    amplitude_from_velocity,
    velocity_from_amplitude,
    zero_amplitude,
)
from .errors import (
    CGBreakdown,
    ConfigError,
    DataError,
    HarmoflowError,
    ShapeError,
    SolverError,
    SynthesisError,
)
from .irls import irls_reconstruct
from .model1 import assemble_model1, cg_solve, model1_reconstruct

__all__ = [
    "CGBreakdown",
    "ConfigError",
    "DataError",
    "Grid",
    "HarmoflowError",
    "HarmonicParams",
    "ShapeError",
    "SolverConfig",
    "SolverError",
    "SynthesisError",
    "amplitude_from_velocity",
    "assemble_model1",
    "cg_solve",
    "irls_reconstruct",
    "model1_reconstruct",
    "velocity_from_amplitude",
    "zero_amplitude",
]

__version__ = "0.1.0"
