"""Temporal Fourier coefficients at the frequencies 0, omega and 2*omega.

All transforms are taken along axis 0 (time) and carry the 1/T factor::

    F[f](nu, x) = 1/T * sum_{t=0}^{T-1} f(t, x) * exp(-1j * t * nu)

Only three bins are ever needed, so each is computed by direct summation
(O(T) per pixel and frequency) instead of a full FFT.
"""

from dataclasses import dataclass

import numpy as np


def phase_vector(frames, nu):
    """Return exp(-1j * t * nu) for t = 0, ..., frames - 1."""
    t = np.arange(frames, dtype=float)
    return np.exp(-1j * t * nu)


def dft_at(series, nu):
    """Normalized discrete Fourier coefficient of ``series`` at angular frequency ``nu``.

    ``series`` may carry trailing (pixel) axes; the sum runs over axis 0.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 0 or series.shape[0] < 1:
        raise ValueError("series needs at least one time sample")
    frames = series.shape[0]
    return np.tensordot(phase_vector(frames, nu), series, axes=(0, 0)) / frames


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Per-pixel coefficients of a real time series at 0, omega and 2*omega.

    ``zero`` is real (the imaginary part of the 0-bin vanishes for real input);
    ``first`` and ``second`` are complex.
    """

    zero: np.ndarray
    first: np.ndarray
    second: np.ndarray

    def at(self, harmonic):
        return (self.zero, self.first, self.second)[harmonic]


def harmonic_coefficients(field, h):
    """Coefficients of ``field`` (time along axis 0) at 0, omega and 2*omega.

    ``h`` is anything with ``frames`` and ``omega`` attributes (normally a
    :class:`harmoflow.core.HarmonicParams`). Products such as ``w * g_i * g_j``
    must be formed by the caller before transforming.
    """
    field = np.asarray(field, dtype=float)
    if field.shape[0] != h.frames:
        raise ValueError(
            f"field has {field.shape[0]} frames but the harmonic parameters expect {h.frames}"
        )
    zero = dft_at(field, 0.0)
    return HarmonicCoefficients(
        zero=np.real(zero),
        first=dft_at(field, h.omega),
        second=dft_at(field, 2.0 * h.omega),
    )
