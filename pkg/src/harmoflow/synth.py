"""Synthetic harmonic-motion image sequences and analytic deformation fixtures.

Sequences are generated backwards: the inverse deformation ``psi`` solves
``d/dt psi = -grad(psi) v`` with ``psi(0, x) = x`` and the frames are
``I(t, x) = I0(psi(t, x))``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import HarmonicParams, check_amplitude, check_images, velocity_at
from .errors import DataError, ShapeError, SynthesisError
from .interp import sample_bicubic

# Setup of the full-size synthetic experiment.
FULL_SHAPE = (200, 206)
FULL_FRAMES = 300
FULL_PERIODS = 3
DESK_SCALE = 0.32
DEFAULT_GAIN = 0.05


@dataclass(frozen=True)
class DeformationMap:
    """Inverse deformation ``psi`` sampled at ``times``, shape ``(len(times), d, n1, n2)``.

    Values are coordinates in the same units as ``coords`` (pixel indices by default).
    """

    psi: np.ndarray
    times: np.ndarray
    coords: tuple

    @property
    def identity(self):
        return np.stack(np.meshgrid(*self.coords, indexing="ij"))[: self.psi.shape[1]]


@dataclass(frozen=True)
class NoiseSpec:
    poisson: bool = True
    salt_pepper: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.salt_pepper <= 1:
            raise ValueError("salt_pepper must lie in [0, 1]")


def pixel_coords(shape):
    return tuple(np.arange(n, dtype=float) for n in shape)


def _spacing(axis_coords):
    return float(axis_coords[1] - axis_coords[0]) if axis_coords.size > 1 else 1.0


def integrate_psi(velocity, frames, grid_shape=None, substeps=4, dt=1.0,
                  grad_sigma=1.0, coords=None, scheme="central"):
    """Integrate the inverse deformation with forward Euler.

    Parameters
    ----------
    velocity : callable or ndarray
        ``velocity(t)`` returning ``(d, n1, n2)`` at any time, or a sampled
        velocity ``(T, d, n1, n2)`` (linearly interpolated, cyclic in time).
    frames : int
        Number of output times ``0, dt, ..., (frames - 1) dt``.
    substeps : int
        Euler steps per output interval.
    grad_sigma : float
        Standard deviation (grid points) of the Gaussian applied to the
        displacement gradient before each step; 0 disables smoothing.
    coords : tuple of 1D arrays, optional
        Uniform coordinates of each grid axis; defaults to pixel indices.
    scheme : {"central", "upwind"}
        Spatial differences of ``psi``. Central differences need the gradient
        smoothing (or tiny steps) to stay stable; one-sided upwind differences
        are stable for ``|v| dt / substeps <= spacing`` and keep 1D maps monotone.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if scheme not in ("central", "upwind"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if not callable(velocity):
        sampled = np.asarray(velocity, dtype=float)
        if sampled.ndim != 4:
            raise ShapeError(f"sampled velocity must be (T, d, n1, n2), got {sampled.shape}")
        grid_shape = sampled.shape[2:]
        velocity = _interpolated_velocity(sampled)
    if coords is None:
        if grid_shape is None:
            raise ValueError("grid_shape or coords is required with a callable velocity")
        coords = pixel_coords(grid_shape)
    coords = tuple(np.asarray(c, dtype=float) for c in coords)
    shape = tuple(c.size for c in coords)
    v0 = np.asarray(velocity(0.0), dtype=float)
    d = v0.shape[0]
    axes = [ax for ax in range(d) if shape[ax] > 1]
    spacing = [_spacing(coords[ax]) for ax in range(d)]
    x = np.stack(np.meshgrid(*coords, indexing="ij"))[:d]
    extent = math.hypot(*(c[-1] - c[0] for c in coords)) or 1.0
    psi = x.copy()
    h = dt / substeps
    out = np.empty((frames, d) + shape)
    t = 0.0
    for k in range(frames):
        out[k] = psi
        if k == frames - 1:
            break
        for s in range(substeps):
            t = (k + s / substeps) * dt
            v = np.asarray(velocity(t), dtype=float)
            disp = psi - x
            step = np.zeros_like(psi)
            for j in axes:
                if scheme == "central":
                    dj = np.gradient(disp, spacing[j], axis=1 + j)
                else:
                    dj = _upwind_diff(disp, spacing[j], 1 + j, v[j])
                if grad_sigma > 0:
                    dj = ndimage.gaussian_filter(dj, grad_sigma, mode="nearest",
                                                 axes=tuple(range(1, 1 + len(shape))))
                dj[j] += 1.0
                step += dj * v[j]
            psi = psi - h * step
        if not np.all(np.isfinite(psi)) or np.max(np.abs(psi - x)) > 10 * extent:
            raise SynthesisError(f"psi integration blew up before t = {(k + 1) * dt}")
    return DeformationMap(out, dt * np.arange(frames, dtype=float), coords)


def _upwind_diff(f, spacing, axis, v):
    # Backward difference where v > 0 (information comes from lower indices).
    back = np.diff(f, axis=axis, prepend=np.take(f, [0], axis=axis)) / spacing
    fwd = np.diff(f, axis=axis, append=np.take(f, [-1], axis=axis)) / spacing
    return np.where(v > 0, back, fwd)


def _interpolated_velocity(sampled):
    T = sampled.shape[0]

    def velocity(t):
        lo = math.floor(t)
        f = t - lo
        return (1 - f) * sampled[lo % T] + f * sampled[(lo + 1) % T]

    return velocity


def harmonic_velocity(a, omega):
    """Closed-form velocity callable for the amplitude ``a``."""
    a = check_amplitude(a)
    return lambda t: velocity_at(a, omega, t)


def render_sequence(I0, psi):
    """Frames ``I0(psi(t, x))`` by bicubic interpolation, nearest-value extrapolation."""
    I0 = np.asarray(I0, dtype=float)
    field = psi.psi
    if field.shape[2:] != I0.shape:
        raise ShapeError(f"deformation grid {field.shape[2:]} does not match image {I0.shape}")
    cols0 = np.zeros(I0.shape)
    frames = []
    for t in range(field.shape[0]):
        cols = field[t, 1] if field.shape[1] == 2 else cols0
        frames.append(sample_bicubic(I0, field[t, 0], cols))
    return np.stack(frames)


def render_harmonic(I0, a, h, substeps=4, grad_sigma=1.0):
    """Image sequence obtained by moving ``I0`` with the harmonic velocity of ``a``."""
    a = check_amplitude(a)
    psi = integrate_psi(harmonic_velocity(a, h.omega), h.frames, grid_shape=a.shape[1:],
                        substeps=substeps, grad_sigma=grad_sigma)
    return render_sequence(I0, psi)


def gaussian_bump_amplitude(n1, n2, reference_shape=None, gain=1.0):
    """Real-valued test amplitude of the full-size synthetic experiment.

    ``a_1 = 0.8 (x1 - N1/2) sin(r^2 / 2000) exp(-r^2 / 3300)`` with ``r = |x - x0|``,
    ``a_2 = 10 exp(-|x - x0/2|^2 / 1650)``, ``x0 = (N1/2, N2/2)``, on 1-based
    pixel coordinates. With ``reference_shape = (N1, N2)`` the pattern of the
    ``N1 x N2`` grid is sampled on the ``n1 x n2`` grid; ``gain`` scales it.
    """
    N1, N2 = (n1, n2) if reference_shape is None else reference_shape
    x1 = (np.arange(1, n1 + 1, dtype=float) * N1 / n1)[:, None]
    x2 = (np.arange(1, n2 + 1, dtype=float) * N2 / n2)[None, :]
    c1, c2 = N1 / 2.0, N2 / 2.0
    r2 = (x1 - c1) ** 2 + (x2 - c2) ** 2
    a1 = 0.8 * (x1 - c1) * np.sin(r2 / 2000.0) * np.exp(-r2 / 3300.0)
    a2 = 10.0 * np.exp(-((x1 - 0.5 * c1) ** 2 + (x2 - 0.5 * c2) ** 2) / 1650.0)
    a2 = np.broadcast_to(a2, a1.shape)
    return gain * np.stack([a1, a2]).astype(complex)


def speckle_image(shape, seed=0, blob_sigma=1.5, low=10.0, high=250.0):
    """Random speckle texture in ``[low, high]`` (stand-in for a scatterer phantom frame)."""
    rng = np.random.default_rng(seed)
    tex = ndimage.gaussian_filter(rng.random(shape), blob_sigma, mode="wrap")
    tex = (tex - tex.min()) / (tex.max() - tex.min())
    return low + (high - low) * tex


def add_noise(images, spec):
    """Poisson noise followed by salt-and-pepper corruption of a fraction of pixels.

    Corrupted pixels are set to the minimum or maximum of their (Poisson-noised)
    frame with equal probability. Deterministic for a fixed ``spec.seed``.
    """
    images = check_images(images)
    rng = np.random.default_rng(spec.seed)
    out = images.copy()
    if spec.poisson:
        if np.any(images < 0):
            raise DataError("Poisson noise needs nonnegative intensities")
        out = rng.poisson(images).astype(float)
    count = int(round(spec.salt_pepper * out.size))
    if count:
        flat = rng.choice(out.size, size=count, replace=False)
        t = flat // (out.shape[1] * out.shape[2])
        lo = out.min(axis=(1, 2))
        hi = out.max(axis=(1, 2))
        salt = rng.random(count) < 0.5
        out.reshape(-1)[flat] = np.where(salt, hi[t], lo[t])
    return out


def scaled_dims(scale):
    """``(T, n1, n2)`` of the synthetic experiment at ``scale`` (rounded up)."""
    def up(n):
        return int(math.ceil(round(scale * n, 9)))

    return up(FULL_FRAMES), up(FULL_SHAPE[0]), up(FULL_SHAPE[1])


@dataclass
class SyntheticInstance:
    images: np.ndarray
    amplitude: np.ndarray
    params: HarmonicParams
    first_frame: np.ndarray
    noisy: np.ndarray = None
    meta: dict = field(default_factory=dict)


def make_instance(scale=DESK_SCALE, periods=FULL_PERIODS, gain=DEFAULT_GAIN, seed=0,
                  substeps=4, grad_sigma=1.0, noise=None, blob_sigma=1.5, frames=None):
    """Replica of the synthetic experiment at ``scale`` of its full size.

    The amplitude keeps the full-size pattern (sampled on the smaller grid),
    multiplied by ``gain`` pixels/frame per unit of the formula. ``frames``
    overrides the scaled sequence length.
    """
    T, n1, n2 = scaled_dims(scale)
    if frames is not None:
        T = int(frames)
    h = HarmonicParams.from_periods(periods, T)
    a = gaussian_bump_amplitude(n1, n2, reference_shape=FULL_SHAPE, gain=gain)
    I0 = speckle_image((n1, n2), seed=seed, blob_sigma=blob_sigma)
    images = render_harmonic(I0, a, h, substeps=substeps, grad_sigma=grad_sigma)
    noisy = add_noise(images, noise) if noise is not None else None
    meta = dict(scale=scale, frames=T, n1=n1, n2=n2, periods=periods, omega=h.omega,
                gain=gain, seed=seed, substeps=substeps, grad_sigma=grad_sigma,
                blob_sigma=blob_sigma)
    if noise is not None:
        meta.update(poisson=noise.poisson, salt_pepper=noise.salt_pepper, noise_seed=noise.seed)
    return SyntheticInstance(images, a, h, I0, noisy, meta)


# -- analytic fixtures ------------------------------------------------------

def periodic_example_phi(t, x, c, omega):
    """Trajectories of ``a(x) = c x``: ``phi(t, x) = x exp((c / omega) sin(omega t))``."""
    return x * np.exp((c / omega) * np.sin(omega * t))


def nonperiodic_example_phi(t, x):
    """Trajectories of ``a(x) = exp(-i x)``, ``omega = 1``, for ``x`` in ``(0, pi)``."""
    s = t + 1.0 / np.tan(x / 2.0)
    return t + 2.0 * (0.5 * np.pi - np.arctan(s))


def bounded_profile_fixture(c, t, x):
    """Closed forms of ``phi(t, x) = x + c (1 - x^2) sin t`` on ``[-1, 1]``.

    Returns ``(phi(t, x), psi(t, x), v(t, x))`` where ``psi`` inverts ``phi`` and
    ``v(t, y) = d/dt phi(t, psi(t, y))`` is the Eulerian velocity at ``y``.
    """
    if not 0 < c < 0.5:
        raise ValueError("c must lie in (0, 1/2)")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise ValueError("x must lie in [-1, 1]")
    s = np.sin(t)
    phi = x + c * (1 - x ** 2) * s
    root = np.sqrt(4 * c * c * s * s - 4 * c * x * s + 1)
    # Rationalized form of (1 - root) / (2 c sin t), finite at sin t = 0.
    psi = 2 * (x - c * s) / (1 + root)
    v = c * (1 - psi ** 2) * np.cos(t)
    return phi, psi, v


def invert_monotone(values, coords, targets):
    """Invert a sampled increasing map: find ``y`` with ``values(y) = target``.

    Uses the piecewise-linear interpolant of ``values`` over ``coords``.
    """
    values = np.asarray(values, dtype=float)
    if np.any(np.diff(values) <= 0):
        raise ValueError("sampled map is not strictly increasing")
    return np.interp(targets, values, coords)
