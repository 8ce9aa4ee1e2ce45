"""Preprocessing, coarse-to-fine pyramid, derivative warping and median filtering."""

import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .core import Grid, check_amplitude, check_images, velocity_from_amplitude, zero_amplitude
from .diffops import FlowDerivatives, central_gradient, image_derivatives
from .errors import ConfigError, ShapeError
from .interp import resize_bicubic, sample_bicubic

log = logging.getLogger(__name__)

MIN_LEVEL_SIZE = 8


def gaussian_kernel(sigma):
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(images, sigma):
    """Per-frame Gaussian smoothing, kernel truncated at ``ceil(3 sigma)``.

    Samples outside the grid count as zero and the kernel is renormalized over
    the samples that fall inside, so constants are preserved up to the border.
    """
    images = np.asarray(images, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return images.copy()
    k = gaussian_kernel(sigma)
    num = images
    den = np.ones(images.shape[-2:])
    for ax in (-2, -1):
        num = ndimage.correlate1d(num, k, axis=ax, mode="constant")
        den = ndimage.correlate1d(den, k, axis=ax, mode="constant")
    return num / den


def pyramid_shapes(shape, levels, eta):
    """Grid shapes from coarsest to finest for ``levels`` levels."""
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    shapes = [tuple(shape)]
    for _ in range(levels - 1):
        n1, n2 = shapes[-1]
        shapes.append((math.ceil(eta * n1), n2 if n2 == 1 else math.ceil(eta * n2)))
    coarse = shapes[-1]
    if min(s for s in coarse if s > 1) < MIN_LEVEL_SIZE:
        raise ConfigError(
            f"{levels} levels with eta={eta} shrink {tuple(shape)} to {coarse}, below {MIN_LEVEL_SIZE} pixels"
        )
    return shapes[::-1]


def build_pyramid(images, levels, eta):
    """Image pyramid as a list from coarsest to finest; the last entry is ``images``."""
    images = check_images(images)
    shapes = pyramid_shapes(images.shape[1:], levels, eta)
    sigma = 1.0 / math.sqrt(2.0 * eta)
    out = [images]
    for shape in shapes[-2::-1]:
        out.append(resize_bicubic(gaussian_smooth(out[-1], sigma), shape))
    return out[::-1]


def resize_amplitude(a, shape):
    """Bicubic resize of every real plane, scaling vector components by the size ratio."""
    a = check_amplitude(a)
    ratio = np.array([shape[0] / a.shape[1], shape[1] / a.shape[2]])
    re = resize_bicubic(a.real, shape)
    im = resize_bicubic(a.imag, shape)
    factors = ratio[: a.shape[0], None, None]
    return factors * re + 1j * factors * im


def upscale_amplitude(a, shape):
    """Initialize a finer pyramid level from a coarser reconstruction."""
    a = check_amplitude(a)
    if shape[0] < a.shape[1] or shape[1] < a.shape[2]:
        raise ShapeError(f"cannot upscale {a.shape[1:]} to the smaller grid {tuple(shape)}")
    return resize_amplitude(a, shape)


def warp_derivatives(images, v):
    """Derivatives linearized around the velocity estimate ``v`` ``(T, d, n1, n2)``.

    ``grad~(t, x) = grad I(t+1, x + v)`` and
    ``dt~(t, x) = I(t+1, x + v) - I(t, x) - grad~^T v``, frames taken cyclically.
    """
    images = check_images(images)
    T, n1, n2 = images.shape
    v = np.asarray(v, dtype=float)
    if v.shape[0] != T or v.shape[2:] != (n1, n2):
        raise ShapeError(f"velocity {v.shape} does not match sequence {images.shape}")
    d = v.shape[1]
    nxt = np.roll(images, -1, axis=0)
    grad_next = central_gradient(nxt)
    rows0, cols0 = np.meshgrid(np.arange(n1, dtype=float), np.arange(n2, dtype=float), indexing="ij")
    grad = np.empty_like(grad_next)
    dt = np.empty_like(images)
    for t in range(T):
        rows = rows0 + v[t, 0]
        cols = cols0 + v[t, 1] if d == 2 else cols0
        warped = sample_bicubic(nxt[t], rows, cols)
        for k in range(d):
            grad[t, k] = sample_bicubic(grad_next[t, k], rows, cols)
        dt[t] = warped - images[t] - np.sum(grad[t] * v[t], axis=0)
    return FlowDerivatives(grad, dt)


def median_filter_plane(plane, window):
    """Median over a ``window x window`` neighbourhood, shrunk at the borders."""
    if window % 2 == 0:
        raise ValueError("median window must be odd")
    r = window // 2
    padded = np.pad(np.asarray(plane, dtype=float), r, constant_values=np.nan)
    windows = sliding_window_view(padded, (window, window))
    return np.nanmedian(windows, axis=(-2, -1))


def median_filter_amplitude(a, window=5):
    """Componentwise median filter of every real plane of the amplitude."""
    a = check_amplitude(a)
    if window % 2 == 0:
        raise ValueError("median window must be odd")
    re = np.stack([median_filter_plane(p, window) for p in a.real])
    im = np.stack([median_filter_plane(p, window) for p in a.imag])
    return re + 1j * im


def run_pyramid(images, h, config, solve_level, a0=None):
    """Coarse-to-fine driver shared by all harmonic solvers.

    ``solve_level(derivs, a_init, level)`` returns the amplitude on the grid
    of ``derivs``. Each level is initialized with the upscaled result of the
    previous one; from the second level on, derivatives are warped around
    that initialization ``config.warps`` times. Every level result is median
    filtered.
    """
    images = check_images(images, h)
    if config.preprocess_sigma > 0:
        images = gaussian_smooth(images, config.preprocess_sigma)
    levels = build_pyramid(images, config.levels, config.eta)
    a = None
    for level, frames in enumerate(levels):
        grid = Grid.of(frames)
        if a is None:
            a = zero_amplitude(grid) if a0 is None else resize_amplitude(a0, grid.shape)
        else:
            a = upscale_amplitude(a, grid.shape)
        passes = 1 if level == 0 or config.warps == 0 else config.warps
        for _ in range(passes):
            if level == 0 or config.warps == 0:
                derivs = image_derivatives(frames)
            else:
                derivs = warp_derivatives(frames, velocity_from_amplitude(a, h))
            a = solve_level(derivs, a, level)
            if config.median_window > 1:
                a = median_filter_amplitude(a, config.median_window)
        log.debug("level %d/%d on %s done", level + 1, len(levels), grid.shape)
    return a
