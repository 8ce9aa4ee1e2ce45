import numpy as np
import pytest

from harmoflow.baselines import (
    PointwiseBlock,
    harmonic_hs_iterate,
    harmonic_hs_residual,
    neighbour_count,
    neighbour_mean,
    pairwise_amplitude,
    pairwise_hs,
)
from harmoflow.core import HarmonicParams, SolverConfig
from harmoflow.diffops import image_derivatives
from harmoflow.metrics import relative_error
from harmoflow.model1 import model1_reconstruct

from conftest import random_derivs


def blob_sequence(frames, shift, shape=(40, 40), width=4.0):
    r, c = np.meshgrid(np.arange(shape[0], dtype=float), np.arange(shape[1], dtype=float), indexing="ij")
    out = []
    for t in range(frames):
        cr, cc = 14 + shift[0] * t, 18 + shift[1] * t
        out.append(100 * np.exp(-((r - cr) ** 2 + (c - cc) ** 2) / (2 * width ** 2)))
    return np.stack(out)


def test_neighbour_mean():
    f = np.arange(12.0).reshape(3, 4)
    m = neighbour_mean(f)
    assert m[1, 1] == pytest.approx((f[0, 1] + f[2, 1] + f[1, 0] + f[1, 2]) / 4)
    assert m[0, 0] == pytest.approx((f[1, 0] + f[0, 1]) / 2)
    one_d = neighbour_mean(np.array([[1.0], [2.0], [4.0]]))
    np.testing.assert_allclose(one_d[:, 0], [2.0, 2.5, 2.0])
    assert neighbour_count((5, 5)) == 4 and neighbour_count((5, 1)) == 2


def test_pointwise_block_symmetric(small_2d):
    h, derivs = small_2d
    block = PointwiseBlock.from_derivatives(derivs, h)
    assert block.matrix.shape == (5, 4, 4, 4)
    np.testing.assert_array_equal(block.matrix, np.swapaxes(block.matrix, -1, -2))
    eig = np.linalg.eigvalsh(block.matrix)
    assert eig.min() >= -1e-10 * eig.max()


def test_static_sequence_stays_zero():
    h = HarmonicParams.from_periods(1, 6)
    imgs = np.repeat(np.random.default_rng(0).random((1, 10, 10)), 6, axis=0)
    assert not harmonic_hs_iterate(imgs, h, 1.0, 20).any()
    assert not pairwise_hs(imgs, 1.0, 20).any()


def test_fixed_point_satisfies_averaged_system(rng):
    h = HarmonicParams.from_periods(1, 8)
    derivs = random_derivs(rng, 8, (8, 7))
    lam = 2.0
    a = harmonic_hs_iterate(None, h, lam, 3000, derivs=derivs)
    block = PointwiseBlock.from_derivatives(derivs, h)
    res = harmonic_hs_residual(a, block, lam)
    assert np.abs(res).max() <= 1e-6 * max(1.0, np.abs(block.rhs).max())


def test_fixed_point_1d(small_1d):
    h, derivs = small_1d
    a = harmonic_hs_iterate(None, h, 1.0, 3000, derivs=derivs)
    res = harmonic_hs_residual(a, PointwiseBlock.from_derivatives(derivs, h), 1.0)
    assert np.abs(res).max() <= 1e-6


def test_iterate_validation():
    h = HarmonicParams.from_periods(1, 6)
    with pytest.raises(ValueError):
        harmonic_hs_iterate(np.zeros((6, 5, 5)), h, 1.0, 0)
    with pytest.raises(ValueError):
        pairwise_hs(np.zeros((1, 5, 5)), 1.0, 5)


def test_pairwise_translation():
    imgs = blob_sequence(5, (1.0, 0.0))
    v = pairwise_hs(imgs, lam=50.0, iters=2000)
    g = image_derivatives(imgs).grad
    mask = np.hypot(g[:, 0], g[:, 1]) > 0.2 * np.hypot(g[:, 0], g[:, 1]).max()
    # The last pair wraps around and is not a translation.
    v1 = v[:-1, 0][mask[:-1]].mean()
    v2 = v[:-1, 1][mask[:-1]].mean()
    assert v1 == pytest.approx(1.0, rel=0.2)
    assert abs(v2) < 0.2


@pytest.mark.slow
def test_harmonic_hs_close_to_model1(desk_clean):
    inst = desk_clean
    lam = 100.0
    a_hs = harmonic_hs_iterate(inst.images, inst.params, lam, 500, preprocess_sigma=0.65)
    a_m1 = model1_reconstruct(inst.images, inst.params, SolverConfig(lam=lam))
    re_hs = relative_error(a_hs, inst.amplitude)
    re_m1 = relative_error(a_m1, inst.amplitude)
    assert abs(re_hs - re_m1) <= 0.1


def test_pairwise_amplitude_shape(desk_clean):
    inst = desk_clean
    a = pairwise_amplitude(inst.images[:, :20, :20], inst.params, 100.0, 5)
    assert a.shape == (2, 20, 20)
