"""Reference solvers: a pointwise Jacobi iteration for the harmonic system and
classical two-frame Horn-Schunck followed by Fourier amplitude extraction."""

import logging
from dataclasses import dataclass

import numpy as np

from .core import Grid, amplitude_from_velocity, check_amplitude, check_images, zero_amplitude
from .diffops import image_derivatives
from .errors import SolverError
from .fourier import dft_at
from .multiscale import gaussian_smooth

log = logging.getLogger(__name__)


def neighbour_count(grid_shape):
    """Number of grid neighbours of an interior pixel (4 in 2D, 2 in 1D)."""
    return 2 * sum(1 for n in grid_shape if n > 1)


def neighbour_mean(field):
    """Mean over the available 4-neighbours along the last two axes."""
    field = np.asarray(field)
    shape = field.shape[-2:]
    total = np.zeros_like(field)
    count = np.zeros(shape)
    for ax, n in zip((-2, -1), shape):
        if n == 1:
            continue
        idx = [slice(None)] * field.ndim
        cidx = [slice(None)] * 2
        lo, hi = slice(1, None), slice(None, -1)
        idx[ax], cidx[ax] = lo, lo
        total[tuple(idx)] += field[tuple(_swap(idx, ax, hi))]
        count[tuple(cidx)] += 1
        idx[ax], cidx[ax] = hi, hi
        total[tuple(idx)] += field[tuple(_swap(idx, ax, lo))]
        count[tuple(cidx)] += 1
    return total / np.maximum(count, 1)


def _swap(idx, ax, sl):
    out = list(idx)
    out[ax] = sl
    return out


@dataclass(frozen=True)
class PointwiseBlock:
    """Per-pixel ``2d x 2d`` data matrices ``C(x)`` and right-hand sides.

    ``matrix`` has shape ``(n1, n2, 2d, 2d)`` acting on ``[a_R; a_I]`` at a pixel;
    ``rhs`` is ``-2 (Re, Im) F[dt I grad I](omega)`` with shape ``(n1, n2, 2d)``.
    """

    matrix: np.ndarray
    rhs: np.ndarray

    @classmethod
    def from_derivatives(cls, derivs, h):
        g, dt = derivs.grad, derivs.dt
        d = g.shape[1]
        grid = derivs.grid_shape
        c = np.empty(grid + (2 * d, 2 * d))
        for i in range(d):
            for j in range(i, d):
                prod = g[:, i] * g[:, j]
                f0 = dft_at(prod, 0.0).real
                f2 = dft_at(prod, 2.0 * h.omega)
                for (r, s), val in (((i, j), f0 + f2.real), ((d + i, d + j), f0 - f2.real),
                                    ((i, d + j), f2.imag), ((d + i, j), f2.imag)):
                    c[..., r, s] = c[..., s, r] = val
        f1 = dft_at(g * dt[:, None], h.omega)
        rhs = -2.0 * np.concatenate([np.moveaxis(f1.real, 0, -1), np.moveaxis(f1.imag, 0, -1)], axis=-1)
        return cls(c, rhs)


def _to_pixel(a):
    return np.concatenate([np.moveaxis(a.real, 0, -1), np.moveaxis(a.imag, 0, -1)], axis=-1)


def _from_pixel(x, d):
    return np.moveaxis(x[..., :d], -1, 0) + 1j * np.moveaxis(x[..., d:], -1, 0)


def harmonic_hs_residual(a, block, lam):
    """Residual ``C(x) a + lam k (a - mean_nb a) - rhs`` of the averaged system, per pixel."""
    a = check_amplitude(a)
    kappa = neighbour_count(a.shape[1:])
    x = _to_pixel(a)
    xbar = _to_pixel(neighbour_mean(a.real) + 1j * neighbour_mean(a.imag))
    return np.einsum("...ij,...j->...i", block.matrix, x) + lam * kappa * (x - xbar) - block.rhs


def harmonic_hs_iterate(images, h, lam, iters, a0=None, preprocess_sigma=0.0, derivs=None):
    """Pointwise Jacobi iteration ``[C(x) + lam k Id] a^{k+1} = lam k mean_nb(a^k) + rhs``.

    ``k`` is the interior neighbour count, so the averaging term matches the
    forward-difference Laplacian of Model I away from the border and ``lam``
    has the same meaning as in Model I.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if derivs is None:
        images = check_images(images, h)
        if preprocess_sigma > 0:
            images = gaussian_smooth(images, preprocess_sigma)
        derivs = image_derivatives(images)
    block = PointwiseBlock.from_derivatives(derivs, h)
    kappa = neighbour_count(derivs.grid_shape)
    d = derivs.grad.shape[1]
    system = block.matrix + lam * kappa * np.eye(2 * d)
    try:
        inv = np.linalg.inv(system)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular pointwise block") from exc
    a = zero_amplitude(Grid(*derivs.grid_shape)) if a0 is None else check_amplitude(a0).copy()
    for _ in range(iters):
        bar = neighbour_mean(a.real) + 1j * neighbour_mean(a.imag)
        x = np.einsum("...ij,...j->...i", inv, lam * kappa * _to_pixel(bar) + block.rhs)
        a = _from_pixel(x, d)
    return a


def pairwise_hs(images, lam, iters, preprocess_sigma=0.0):
    """Two-frame Horn-Schunck for every cyclic pair ``(t, t+1 mod T)``.

    Jacobi iteration ``v = mean_nb(v) - g (g^T mean_nb(v) + dt) / (lam k + |g|^2)``
    run for all pairs at once. Returns the velocity ``(T, d, n1, n2)``.
    """
    images = check_images(images)
    if images.shape[0] < 2:
        raise ValueError("pairwise Horn-Schunck needs at least two frames")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if preprocess_sigma > 0:
        images = gaussian_smooth(images, preprocess_sigma)
    derivs = image_derivatives(images)
    g, dt = derivs.grad, derivs.dt
    kappa = neighbour_count(derivs.grid_shape)
    denom = lam * kappa + np.sum(g * g, axis=1)
    v = np.zeros_like(g)
    for _ in range(iters):
        bar = neighbour_mean(v)
        v = bar - g * ((np.sum(g * bar, axis=1) + dt) / denom)[:, None]
    return v


def pairwise_amplitude(images, h, lam, iters, preprocess_sigma=0.0):
    """Amplitude ``2 F[v](omega)`` of the pairwise Horn-Schunck velocity."""
    return amplitude_from_velocity(pairwise_hs(images, lam, iters, preprocess_sigma), h)
