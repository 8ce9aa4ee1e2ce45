"""Evaluation metrics: relative amplitude/image errors and SSIM."""

import csv

import numpy as np
from scipy import ndimage

from .core import check_amplitude
from .errors import DataError, ShapeError

SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _same_shape(x, y):
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")


def relative_error(a_hat, a_true):
    """``sum_j ||a_hat_j - a_j||^2 / sum_j ||a_j||^2`` over complex component planes."""
    a_hat = np.asarray(a_hat, dtype=complex)
    a_true = np.asarray(a_true, dtype=complex)
    _same_shape(a_hat, a_true)
    den = float(np.sum(np.abs(a_true) ** 2))
    if den == 0:
        raise DataError("relative error against a zero ground truth")
    return float(np.sum(np.abs(a_hat - a_true) ** 2)) / den


def relative_image_error(I_hat, I_ref):
    """``sum_t ||I_hat(t) - I(t)||^2 / sum_t ||I(t)||^2``."""
    I_hat = np.asarray(I_hat, dtype=float)
    I_ref = np.asarray(I_ref, dtype=float)
    _same_shape(I_hat, I_ref)
    den = float(np.sum(I_ref ** 2))
    if den == 0:
        raise DataError("relative image error against a zero reference")
    return float(np.sum((I_hat - I_ref) ** 2)) / den


def ssim(plane_a, plane_b, data_range=None):
    """Mean structural similarity of two planes with a Gaussian window (sigma 1.5).

    ``data_range`` defaults to ``max - min`` of ``plane_b`` (the reference).
    A constant reference raises unless both planes are equal constants (1.0).
    """
    x = np.asarray(plane_a, dtype=float)
    y = np.asarray(plane_b, dtype=float)
    _same_shape(x, y)
    if data_range is None:
        data_range = float(np.ptp(y))
        if data_range == 0:
            if np.ptp(x) == 0 and np.all(x == y):
                return 1.0
            raise DataError("SSIM reference plane is constant; pass data_range")
    if data_range <= 0:
        raise ValueError("data_range must be positive")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    def blur(z):
        return ndimage.gaussian_filter(z, SSIM_SIGMA, mode="reflect", truncate=3.5)

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def amplitude_ssim(a_hat, a_true):
    """SSIM of every real plane: keys ``re1, im1, re2, im2`` (1-based components).

    Planes of a constant reference (e.g. the imaginary part of a real ground
    truth) use the range of the whole reference amplitude instead.
    """
    a_hat = check_amplitude(a_hat)
    a_true = check_amplitude(a_true)
    _same_shape(a_hat, a_true)
    overall = float(max(np.ptp(a_true.real), np.ptp(a_true.imag)))
    out = {}
    for k in range(a_true.shape[0]):
        for part, get in (("re", np.real), ("im", np.imag)):
            ref = get(a_true[k])
            rng = float(np.ptp(ref)) or overall or 1.0
            out[f"{part}{k + 1}"] = ssim(get(a_hat[k]), ref, data_range=rng)
    return out


def issim(seq_hat, seq_ref):
    """Mean over frames of the SSIM between the sequences."""
    seq_hat = np.asarray(seq_hat, dtype=float)
    seq_ref = np.asarray(seq_ref, dtype=float)
    _same_shape(seq_hat, seq_ref)
    return float(np.mean([ssim(a, b) for a, b in zip(seq_hat, seq_ref)]))


def write_report(path, rows):
    """Write ``(metric, value)`` rows as a two-column CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, repr(float(value))])
