import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from harmoflow.core import (
    Grid,
    HarmonicParams,
    SolverConfig,
    amplitude_from_velocity,
    check_amplitude,
    check_images,
    velocity_from_amplitude,
    zero_amplitude,
)
from harmoflow.errors import ConfigError, DataError, ShapeError


def test_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        Grid(1, 5)
    assert Grid(5, 1).d == 1
    assert Grid(5, 4).d == 2


def test_harmonic_params_period_check():
    h = HarmonicParams.from_periods(3, 96)
    assert h.omega == pytest.approx(6 * math.pi / 96)
    with pytest.raises(ConfigError):
        HarmonicParams(0.1, 1, 8)
    with pytest.raises(ConfigError):
        HarmonicParams.from_periods(0, 8)


def test_harmonic_params_rejects_aliasing():
    # 2*omega = 2*pi for T = 2p, indistinguishable from frequency 0.
    with pytest.raises(ConfigError):
        HarmonicParams.from_periods(4, 8)


def test_solver_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(lam=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(eta=1.0)
    with pytest.raises(ConfigError):
        SolverConfig(median_window=4)


def test_zero_amplitude_gives_zero_velocity():
    h = HarmonicParams.from_periods(1, 8)
    v = velocity_from_amplitude(zero_amplitude(Grid(4, 3)), h)
    assert v.shape == (8, 2, 4, 3)
    assert not v.any()


def test_velocity_cosine_at_zero():
    h = HarmonicParams.from_periods(1, 8)
    a = np.zeros((2, 3, 3), dtype=complex)
    a[0] = 1.0
    v = velocity_from_amplitude(a, h)
    np.testing.assert_allclose(v[0, 0], 1.0)
    np.testing.assert_allclose(v[0, 1], 0.0)


def test_velocity_sine_quarter_period():
    h = HarmonicParams.from_periods(1, 8)
    a = np.zeros((2, 3, 3), dtype=complex)
    a[0] = 1j
    v = velocity_from_amplitude(a, h)
    np.testing.assert_allclose(v[2, 0], -1.0, atol=1e-15)
    np.testing.assert_allclose(v[2, 1], 0.0)


def test_constant_velocity_has_no_harmonic():
    h = HarmonicParams.from_periods(2, 10)
    v = np.ones((10, 2, 3, 4)) * 3.5
    np.testing.assert_allclose(amplitude_from_velocity(v, h), 0.0, atol=1e-14)


def test_amplitude_from_velocity_frame_mismatch():
    h = HarmonicParams.from_periods(1, 8)
    with pytest.raises(ShapeError):
        amplitude_from_velocity(np.zeros((7, 1, 4, 1)), h)


def test_brute_force_round_trip():
    # Independent reconstruction by explicit sums of cos/sin projections.
    rng = np.random.default_rng(0)
    h = HarmonicParams.from_periods(2, 9)
    a = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    v = velocity_from_amplitude(a, h)
    c = sum(v[t] * math.cos(h.omega * t) for t in range(9)) * 2 / 9
    s = -sum(v[t] * math.sin(h.omega * t) for t in range(9)) * 2 / 9
    np.testing.assert_allclose(c, a.real, atol=1e-13)
    np.testing.assert_allclose(s, a.imag, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(
    periods=st.integers(1, 5),
    extra=st.integers(1, 20),
    d=st.sampled_from([1, 2]),
    seed=st.integers(0, 2**31 - 1),
)
def test_round_trip_property(periods, extra, d, seed):
    frames = 2 * periods + extra
    h = HarmonicParams.from_periods(periods, frames)
    rng = np.random.default_rng(seed)
    n2 = 1 if d == 1 else 3
    a = rng.standard_normal((d, 4, n2)) + 1j * rng.standard_normal((d, 4, n2))
    back = amplitude_from_velocity(velocity_from_amplitude(a, h), h)
    assert np.linalg.norm(back - a) <= 1e-12 * np.linalg.norm(a)


@settings(max_examples=20, deadline=None)
@given(arrays(np.float64, (2, 3, 3), elements=st.floats(-10, 10)), st.integers(1, 3))
def test_velocity_is_periodic(re, shift):
    h = HarmonicParams.from_periods(1, 6)
    a = re + 0.5j * re[::-1]
    v = velocity_from_amplitude(a, h)
    # Extending to t + T reproduces t.
    for t in range(6):
        tt = t + shift * h.frames
        ext = a.real * math.cos(h.omega * tt) - a.imag * math.sin(h.omega * tt)
        np.testing.assert_allclose(ext, v[t], atol=1e-11)


def test_check_images_rejects_nan():
    imgs = np.zeros((4, 5, 5))
    imgs[1, 2, 2] = np.nan
    with pytest.raises(DataError):
        check_images(imgs)
    with pytest.raises(ShapeError):
        check_images(np.zeros((5, 5)))


def test_check_amplitude_shape():
    with pytest.raises(ShapeError):
        check_amplitude(np.zeros((3, 4, 4)))
    with pytest.raises(ShapeError):
        check_amplitude(np.zeros((2, 4, 4)), Grid(4, 5))
