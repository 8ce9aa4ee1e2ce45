"""Catmull-Rom bicubic sampling with nearest-value extrapolation."""

import numpy as np


def _cubic_weights(f):
    """Catmull-Rom weights for taps at offsets -1, 0, 1, 2 given fractional part ``f``."""
    f2 = f * f
    f3 = f2 * f
    return (
        0.5 * (-f3 + 2 * f2 - f),
        0.5 * (3 * f3 - 5 * f2 + 2),
        0.5 * (-3 * f3 + 4 * f2 + f),
        0.5 * (f3 - f2),
    )


def _taps(coord, n):
    coord = np.clip(coord, 0.0, n - 1.0)
    base = np.floor(coord)
    frac = coord - base
    base = base.astype(np.intp)
    idx = [np.clip(base + off, 0, n - 1) for off in (-1, 0, 1, 2)]
    return idx, _cubic_weights(frac)


def sample_bicubic(plane, rows, cols):
    """Sample a 2D ``plane`` at fractional pixel positions ``(rows, cols)``.

    Positions outside the grid take the value at the nearest grid point.
    Integer positions return the stored samples exactly.
    """
    plane = np.asarray(plane, dtype=float)
    n1, n2 = plane.shape
    ri, rw = _taps(np.asarray(rows, dtype=float), n1)
    ci, cw = _taps(np.asarray(cols, dtype=float), n2)
    out = np.zeros(np.broadcast(rows, cols).shape)
    for a in range(4):
        row_acc = np.zeros_like(out)
        for b in range(4):
            row_acc += cw[b] * plane[ri[a], ci[b]]
        out += rw[a] * row_acc
    return out


def resample_matrix(n_src, n_tgt):
    """Dense ``(n_tgt, n_src)`` bicubic resampling matrix with pixel-centre alignment."""
    coord = (np.arange(n_tgt) + 0.5) * (n_src / n_tgt) - 0.5
    idx, w = _taps(coord, n_src)
    mat = np.zeros((n_tgt, n_src))
    rows = np.arange(n_tgt)
    for k in range(4):
        np.add.at(mat, (rows, idx[k]), w[k])
    return mat


def resize_bicubic(array, shape):
    """Resize the last two axes of ``array`` to ``shape`` (separable bicubic)."""
    array = np.asarray(array, dtype=float)
    n1, n2 = array.shape[-2:]
    m1 = resample_matrix(n1, shape[0])
    m2 = resample_matrix(n2, shape[1])
    return np.einsum("ik,...kl,jl->...ij", m1, array, m2, optimize=True)
