"""Model I: quadratic data term and quadratic smoothness, solved by conjugate gradients.

The discrete energy for a harmonic velocity ``v = Re(a exp(1j omega t))`` is::

    E(a) = sum_t sum_x (grad I^T v + dt I)^2 + lam * sum_t sum_x ||D v||^2
         = ||M a - y||^2 + (lam T / 2) ||R a||^2

and its minimizer solves the normal equations ``C a = b`` with
``C = M^T M + (lam T / 2) R^T R`` and ``b = M^T y``. Unknowns are stacked as
``[vec(a_R); vec(a_I)]`` with ``vec`` the C-order flattening of ``(d, n1, n2)``.

:class:`HarmonicSystem` applies ``C`` matrix-free from per-pixel Fourier
coefficients (``O(n1 n2)`` per product after ``O(T n1 n2)`` setup). The same
class carries the weighted systems of Models II and III.
"""

import logging

import numpy as np

from .core import check_amplitude, check_images
from .diffops import (
    forward_diff,
    forward_diff_adjoint,
    forward_diff_matrix,
    image_derivatives,
    spatial_axes,
)
from .errors import CGBreakdown, DataError, ShapeError
from .fourier import dft_at
from .multiscale import run_pyramid

log = logging.getLogger(__name__)


def stack_amplitude(a):
    """Complex ``(d, n1, n2)`` amplitude -> real vector ``[vec(a_R); vec(a_I)]``."""
    a = np.asarray(a, dtype=complex)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def unstack_amplitude(x, shape):
    """Inverse of :func:`stack_amplitude` for an amplitude of ``shape = (d, n1, n2)``."""
    n = int(np.prod(shape))
    if x.shape != (2 * n,):
        raise ShapeError(f"stacked vector of length {x.shape} does not match amplitude {shape}")
    return x[:n].reshape(shape) + 1j * x[n:].reshape(shape)


class HarmonicSystem:
    """Symmetric PSD operator ``C`` and right-hand side ``b`` of the harmonic flow equations.

    Parameters
    ----------
    frames : int
        Number of frames ``T``.
    lam : float
        Regularization weight.
    data0, data2 : ndarray, shape (d, d, n1, n2)
        Normalized Fourier coefficients at 0 and 2*omega of ``w_D * grad I grad I^T``.
    rhs : ndarray, shape (2 * d * n1 * n2,)
        Stacked right-hand side ``b``.
    reg0, reg2 : float or ndarray (n1, n2)
        Fourier coefficients at 0 and 2*omega of the smoothness weight ``w_R``
        (``1`` and ``0`` for Model I).
    """

    def __init__(self, frames, lam, data0, data2, rhs, reg0=1.0, reg2=0.0):
        self.frames = int(frames)
        self.lam = float(lam)
        self.data0 = np.asarray(data0, dtype=float)
        self.data2 = np.asarray(data2, dtype=complex)
        d = self.data0.shape[0]
        self.shape = (d,) + self.data0.shape[2:]
        self.rhs = np.asarray(rhs, dtype=float)
        if self.rhs.shape != (self.size,):
            raise ShapeError(f"rhs has shape {self.rhs.shape}, expected ({self.size},)")
        reg2 = np.asarray(reg2, dtype=complex)
        self.reg_rr = np.asarray(reg0 + reg2.real, dtype=float)
        self.reg_ii = np.asarray(reg0 - reg2.real, dtype=float)
        self.reg_ri = np.asarray(reg2.imag, dtype=float)
        self._axes = spatial_axes(self.shape[1:])

    @property
    def size(self):
        return 2 * int(np.prod(self.shape))

    def apply_planes(self, ar, ai):
        """``C`` applied to an amplitude given by its real and imaginary planes."""
        half_t = 0.5 * self.frames
        a2r, a2i = self.data2.real, self.data2.imag
        out_r = half_t * (np.einsum("ijxy,jxy->ixy", self.data0 + a2r, ar)
                          + np.einsum("ijxy,jxy->ixy", a2i, ai))
        out_i = half_t * (np.einsum("ijxy,jxy->ixy", a2i, ar)
                          + np.einsum("ijxy,jxy->ixy", self.data0 - a2r, ai))
        scale = self.lam * half_t
        for axis in self._axes:
            r = forward_diff(ar, axis)
            s = forward_diff(ai, axis)
            out_r += scale * forward_diff_adjoint(self.reg_rr * r + self.reg_ri * s, axis)
            out_i += scale * forward_diff_adjoint(self.reg_ri * r + self.reg_ii * s, axis)
        return out_r, out_i

    def apply(self, x):
        a = unstack_amplitude(np.asarray(x, dtype=float), self.shape)
        out_r, out_i = self.apply_planes(a.real, a.imag)
        return np.concatenate([out_r.ravel(), out_i.ravel()])

    __matmul__ = apply

    def quadratic(self, x):
        """``x^T C x / 2 - b^T x``, the energy up to a constant and a factor 1/2."""
        return 0.5 * x @ self.apply(x) - self.rhs @ x

    def to_dense(self):
        """Dense matrix of ``C`` (column by column; small systems only)."""
        n = self.size
        eye = np.eye(n)
        return np.column_stack([self.apply(eye[:, k]) for k in range(n)])


def assemble_system(derivs, h, lam, data_weights=None, reg_weights=1.0):
    """Normal equations of the (weighted) quadratic harmonic flow energy.

    ``data_weights`` is ``None`` (all ones) or an array ``(T, n1, n2)``;
    ``reg_weights`` is a scalar (constant in time and space) or an array
    ``(T, n1, n2)``. With unit weights this is Model I.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    g = derivs.grad
    dt = derivs.dt
    if derivs.frames != h.frames:
        raise ShapeError(f"derivatives have {derivs.frames} frames, expected {h.frames}")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(dt))):
        raise DataError("image derivatives contain non-finite values")
    d = g.shape[1]
    wg = g if data_weights is None else g * data_weights[:, None]
    data0 = np.empty((d, d) + derivs.grid_shape)
    data2 = np.empty((d, d) + derivs.grid_shape, dtype=complex)
    for i in range(d):
        for j in range(i, d):
            prod = wg[:, i] * g[:, j]
            data0[i, j] = data0[j, i] = dft_at(prod, 0.0).real
            data2[i, j] = data2[j, i] = dft_at(prod, 2.0 * h.omega)
    first = dft_at(wg * dt[:, None], h.omega)
    rhs = -h.frames * np.concatenate([first.real.ravel(), first.imag.ravel()])
    if np.isscalar(reg_weights):
        reg0, reg2 = float(reg_weights), 0.0
    else:
        reg_weights = np.asarray(reg_weights, dtype=float)
        if not np.all(np.isfinite(reg_weights)):
            raise DataError("smoothness weights contain non-finite values")
        reg0 = dft_at(reg_weights, 0.0).real
        reg2 = dft_at(reg_weights, 2.0 * h.omega)
    return HarmonicSystem(h.frames, lam, data0, data2, rhs, reg0, reg2)


def assemble_model1(images, h, lam, derivs=None):
    """Model I system for an image sequence (derivatives computed unless given)."""
    if derivs is None:
        derivs = image_derivatives(check_images(images, h))
    return assemble_system(derivs, h, lam)


def model1_energy(a, derivs, h, lam):
    """Direct time-domain evaluation of the discrete Model I energy ``E(a)``.

    Sums over every frame without any Fourier identity; used as an
    independent check of the assembled system.
    """
    a = check_amplitude(a)
    t = h.times()
    energy = 0.0
    for k in range(h.frames):
        v = a.real * np.cos(h.omega * t[k]) - a.imag * np.sin(h.omega * t[k])
        resid = np.sum(derivs.grad[k] * v, axis=0) + derivs.dt[k]
        energy += np.sum(resid ** 2)
        for axis in spatial_axes(a.shape[1:]):
            energy += lam * np.sum(forward_diff(v, axis) ** 2)
    return float(energy)


def dense_normal_equations(derivs, h, lam):
    """Explicit ``(M^T M + lam T/2 R^T R, M^T y)`` built from stacked per-frame blocks.

    ``M`` has one block row per frame, ``[diag(g_k) cos(t w), -diag(g_k) sin(t w)]``
    per velocity component ``k``; ``R`` applies the dense forward-difference
    matrices to every component of ``a_R`` and ``a_I``. Intended for small grids.
    """
    T = h.frames
    d = derivs.grad.shape[1]
    n1, n2 = derivs.grid_shape
    npix = n1 * n2
    n = d * npix
    blocks = []
    for t in range(T):
        c, s = np.cos(h.omega * t), np.sin(h.omega * t)
        row_r = np.hstack([np.diag(derivs.grad[t, k].ravel()) for k in range(d)])
        blocks.append(np.hstack([c * row_r, -s * row_r]))
    M = np.vstack(blocks)
    y = -derivs.dt.reshape(T * npix)
    eye1, eye2 = np.eye(n1), np.eye(n2)
    ops = [np.kron(forward_diff_matrix(n1), eye2)]
    if d == 2:
        ops.append(np.kron(eye1, forward_diff_matrix(n2)))
    per_component = np.vstack(ops)
    R = np.kron(np.eye(2 * d), per_component)
    C = M.T @ M + 0.5 * lam * T * R.T @ R
    assert C.shape == (2 * n, 2 * n)
    return C, M.T @ y


def cg_solve(system, x0=None, iters=50, tol=1e-10, history=None):
    """Conjugate gradients for ``C x = b``, returning the amplitude.

    Stops after ``iters`` iterations or once ``||C x - b|| <= tol * ||b||``. If
    ``history`` is a list, the relative residual after every iteration
    (starting with the initial one) is appended to it.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = system.rhs
    x = np.zeros(system.size) if x0 is None else stack_amplitude(x0).copy()
    r = b - system.apply(x)
    bnorm = np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    scale = bnorm if bnorm > 0 else rnorm
    if history is not None:
        history.append(rnorm / scale if scale > 0 else 0.0)
    if rnorm == 0 or rnorm <= tol * scale:
        return unstack_amplitude(x, system.shape)
    p = r.copy()
    rr = rnorm ** 2
    for it in range(iters):
        cp = system.apply(p)
        curv = p @ cp
        if curv <= 1e-14 * (p @ p) * _op_scale(system):
            raise CGBreakdown(
                f"non-positive curvature {curv:.3e} at CG iteration {it} "
                f"(relative residual {np.sqrt(rr) / scale:.3e})"
            )
        alpha = rr / curv
        x += alpha * p
        r -= alpha * cp
        rr_new = r @ r
        rel = np.sqrt(rr_new) / scale
        if history is not None:
            history.append(rel)
        if rel <= tol:
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return unstack_amplitude(x, system.shape)


def _op_scale(system):
    # Rough magnitude of C's entries, so the curvature test is scale free.
    return 0.5 * system.frames * (np.max(np.abs(system.data0)) + system.lam
                                  * max(1.0, float(np.max(np.abs(system.reg_rr)))) + 1e-300)


def model1_reconstruct(images, h, config, trace=None):
    """Full Model I pipeline: preprocessing, pyramid, warping, CG per level, median filter.

    ``trace``, if a list, receives ``(level, 0, cg_iteration, relative_residual)`` rows.
    """
    images = check_images(images, h)

    def solve(derivs, a_init, level):
        system = assemble_system(derivs, h, config.lam)
        history = []
        a = cg_solve(system, a_init, config.cg_iters, config.cg_tol, history=history)
        if trace is not None:
            trace.extend((level, 0, i, r) for i, r in enumerate(history))
        log.debug("model I level %d: %d CG iterations, residual %.3e",
                  level, len(history) - 1, history[-1])
        return a

    return run_pyramid(images, h, config, solve)
