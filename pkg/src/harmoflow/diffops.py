"""Finite-difference operators on the pixel grid.

Spatial axis ``j`` of a field refers to array axis ``j - 2`` (the last two
axes are always rows and columns), so the same functions work on single
planes, per-frame stacks and vector fields. Everything is zero padded.
"""

import numpy as np
from scipy import ndimage

from .errors import ShapeError

# Correlation kernel for d/dx1 (rows); d/dx2 uses the transpose.
CENTRAL_KERNEL = np.array([[-1.0, -2.0, -1.0],
                           [0.0, 0.0, 0.0],
                           [1.0, 2.0, 1.0]]) / 8.0
CENTRAL_KERNEL_1D = np.array([-1.0, 0.0, 1.0]) / 2.0


def _array_axis(axis):
    if axis not in (0, 1):
        raise ValueError(f"spatial axis must be 0 or 1, got {axis}")
    return axis - 2


def central_gradient(images):
    """Spatial gradient of every frame, shape ``(T, d, n1, n2)``.

    2D frames use the 3x3 smoothed central kernel; 1D sequences (``n2 == 1``)
    use the plain central difference ``(f(k+1) - f(k-1)) / 2``.
    """
    images = np.asarray(images, dtype=float)
    if images.ndim != 3:
        raise ShapeError(f"expected (T, n1, n2), got {images.shape}")
    if images.shape[2] == 1:
        g = ndimage.correlate1d(images, CENTRAL_KERNEL_1D, axis=1, mode="constant")
        return g[:, None]
    if min(images.shape[1:]) < 3:
        raise ShapeError("2D frames must be at least 3x3 for central differences")
    k1 = CENTRAL_KERNEL[None]
    g1 = ndimage.correlate(images, k1, mode="constant")
    g2 = ndimage.correlate(images, k1.transpose(0, 2, 1), mode="constant")
    return np.stack([g1, g2], axis=1)


def forward_diff(f, axis):
    """``D f(k) = f(k+1) - f(k)`` along spatial ``axis``; the sample past the edge is 0."""
    ax = _array_axis(axis)
    f = np.asarray(f, dtype=float)
    out = -f.copy()
    lead = [slice(None)] * f.ndim
    lead[ax] = slice(None, -1)
    tail = [slice(None)] * f.ndim
    tail[ax] = slice(1, None)
    out[tuple(lead)] += f[tuple(tail)]
    return out


def forward_diff_adjoint(g, axis):
    """Exact transpose of :func:`forward_diff`: ``(D^T g)(k) = g(k-1) - g(k)``."""
    ax = _array_axis(axis)
    g = np.asarray(g, dtype=float)
    out = -g.copy()
    lead = [slice(None)] * g.ndim
    lead[ax] = slice(None, -1)
    tail = [slice(None)] * g.ndim
    tail[ax] = slice(1, None)
    out[tuple(tail)] += g[tuple(lead)]
    return out


def forward_diff_matrix(n):
    """Dense ``n x n`` forward-difference matrix (zero padding makes the last row ``-e_n``)."""
    return np.eye(n, k=1) - np.eye(n)


def spatial_axes(grid_shape):
    """Spatial axes carrying derivatives: ``(0,)`` in 1D, ``(0, 1)`` in 2D."""
    return (0,) if grid_shape[1] == 1 else (0, 1)


def temporal_diff(images):
    """Cyclic forward difference in time: ``I(t+1 mod T) - I(t)``."""
    images = np.asarray(images, dtype=float)
    if images.shape[0] < 2:
        raise ShapeError("temporal differences need at least two frames")
    return np.roll(images, -1, axis=0) - images


class FlowDerivatives:
    """Spatial gradient ``(T, d, n1, n2)`` and temporal derivative ``(T, n1, n2)``
    entering the optical-flow residual ``G = grad^T v + dt``."""

    __slots__ = ("grad", "dt")

    def __init__(self, grad, dt):
        grad = np.asarray(grad, dtype=float)
        dt = np.asarray(dt, dtype=float)
        if grad.ndim != 4 or grad.shape[0] != dt.shape[0] or grad.shape[2:] != dt.shape[1:]:
            raise ShapeError(f"gradient {grad.shape} and time derivative {dt.shape} disagree")
        self.grad = grad
        self.dt = dt

    @property
    def frames(self):
        return self.dt.shape[0]

    @property
    def grid_shape(self):
        return self.dt.shape[1:]

    def residual(self, v):
        """Optical-flow residual ``grad I^T v + dt I`` for a velocity ``(T, d, n1, n2)``."""
        return np.einsum("tkxy,tkxy->txy", self.grad, v) + self.dt


def image_derivatives(images):
    """Unwarped derivatives: central spatial gradient and cyclic forward time difference."""
    return FlowDerivatives(central_gradient(images), temporal_diff(images))


def velocity_gradient_norm(v):
    """Frobenius norm of the forward-difference Jacobian of ``v`` per ``(t, x)``."""
    sq = np.zeros(v.shape[:1] + v.shape[2:])
    for axis in spatial_axes(v.shape[2:]):
        sq += np.sum(forward_diff(v, axis) ** 2, axis=1)
    return np.sqrt(sq)
