"""Domain types and the harmonic velocity model.

Array conventions used throughout the package (``d`` = 1 or 2):

* image sequence: real ``(T, n1, n2)``; the 1D case is encoded as ``n2 == 1``
* amplitude: complex ``(d, n1, n2)``, ``a = a_R + 1j * a_I``
* velocity: real ``(T, d, n1, n2)``

Velocity component ``k`` points along array axis ``k`` (rows first), in
pixels per frame. Frames are indexed ``t = 0, ..., T - 1`` with unit step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .fourier import dft_at

_PERIOD_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 1:
            raise ShapeError(f"grid {self.n1}x{self.n2} is too small (need n1 >= 2, n2 >= 1)")

    @property
    def d(self):
        return 1 if self.n2 == 1 else 2

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def size(self):
        return self.n1 * self.n2

    @classmethod
    def of(cls, array):
        """Grid of the last two axes of ``array``."""
        return cls(int(array.shape[-2]), int(array.shape[-1]))


@dataclass(frozen=True)
class HarmonicParams:
    """Known oscillation frequency ``omega`` (rad/frame) observed for ``periods`` full periods."""

    omega: float
    periods: int
    frames: int

    def __post_init__(self):
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")
        if self.frames < 2:
            raise ConfigError("frames must be >= 2")
        if not math.isclose(self.frames * self.omega, 2 * math.pi * self.periods,
                            rel_tol=_PERIOD_RTOL):
            raise ConfigError(
                f"T*omega = {self.frames * self.omega!r} does not equal 2*pi*p for p = {self.periods}"
            )
        # 2*omega must not alias onto frequency 0, otherwise the cos^2/sin^2
        # averages used by every system assembly are not 1/2.
        if (2 * self.periods) % self.frames == 0:
            raise ConfigError(
                f"{self.frames} frames cannot resolve {self.periods} periods (need T > 2p)"
            )

    @classmethod
    def from_periods(cls, periods, frames):
        return cls(omega=2 * math.pi * periods / frames, periods=int(periods), frames=int(frames))

    def times(self):
        return np.arange(self.frames, dtype=float)


@dataclass(frozen=True)
class SolverConfig:
    """Regularization, smoothing schedule, iteration budgets and pyramid settings.

    ``levels`` counts pyramid levels (1 = no pyramid); ``warps`` is the number
    of derivative warps per level after the coarsest.
    """

    lam: float = 1.0
    eps0: float = 1.0
    delta0: float = 1.0
    irls_iters: int = 5
    cg_iters: int = 50
    cg_tol: float = 1e-10
    levels: int = 2
    eta: float = 0.8
    preprocess_sigma: float = 0.65
    median_window: int = 5
    warps: int = 1

    def __post_init__(self):
        for name in ("lam", "eps0", "delta0", "cg_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("irls_iters", "cg_iters", "levels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)")
        if self.preprocess_sigma < 0:
            raise ConfigError("preprocess_sigma must be >= 0")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ConfigError("median_window must be a positive odd integer")
        if self.warps < 0:
            raise ConfigError("warps must be >= 0")


def check_images(images, h=None):
    """Validate an image sequence and return it as a float array ``(T, n1, n2)``."""
    images = np.asarray(images, dtype=float)
    if images.ndim != 3:
        raise ShapeError(f"image sequence must have shape (T, n1, n2), got {images.shape}")
    Grid.of(images)
    if not np.all(np.isfinite(images)):
        raise DataError("image sequence contains non-finite values")
    if h is not None and images.shape[0] != h.frames:
        raise ShapeError(f"sequence has {images.shape[0]} frames, expected T = {h.frames}")
    return images


def check_amplitude(a, grid=None):
    """Validate an amplitude field and return it as complex ``(d, n1, n2)``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 3 or a.shape[0] not in (1, 2):
        raise ShapeError(f"amplitude must have shape (d, n1, n2) with d in (1, 2), got {a.shape}")
    if grid is not None and a.shape[1:] != grid.shape:
        raise ShapeError(f"amplitude grid {a.shape[1:]} does not match {grid.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError("amplitude contains non-finite values")
    return a


def zero_amplitude(grid):
    return np.zeros((grid.d,) + grid.shape, dtype=complex)


def velocity_from_amplitude(a, h):
    """Sample ``v(t, x) = a_R cos(t omega) - a_I sin(t omega)`` at frames 0..T-1."""
    a = check_amplitude(a)
    t = h.times()
    c = np.cos(t * h.omega)[:, None, None, None]
    s = np.sin(t * h.omega)[:, None, None, None]
    return c * a.real[None] - s * a.imag[None]


def velocity_at(a, omega, t):
    """Harmonic velocity field at a single (possibly fractional) time ``t``."""
    return a.real * math.cos(omega * t) - a.imag * math.sin(omega * t)


def amplitude_from_velocity(v, h):
    """Fit the harmonic amplitude ``a = 2 F[v](omega)`` of a sampled velocity."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 4 or v.shape[1] not in (1, 2):
        raise ShapeError(f"velocity must have shape (T, d, n1, n2), got {v.shape}")
    if v.shape[0] != h.frames:
        raise ShapeError(f"velocity has {v.shape[0]} frames, expected T = {h.frames}")
    return 2.0 * dft_at(v, h.omega)
