import warnings

import numpy as np
import pytest

from cauchyprox import experiments as ex
from cauchyprox.linops import Psf2D
from cauchyprox.metrics import PSNR_CAP, mae, psnr, rmse, ssim
from cauchyprox.penalties import CauchyPenalty, tv_2d
from cauchyprox.signals import add_awgn, heavy_sine, phantom, sigma_from_bsnr


# --- signals ---------------------------------------------------------------------


def test_heavy_sine_hand_values():
    # t = 0, 1/8, 3/8, 1/2: sin(4 pi t) = 0, 1, -1, 0
    s = heavy_sine(8)
    assert s[0] == 0.0
    assert s[1] == pytest.approx(4.0 + 1.0 - 1.0)
    assert s[3] == pytest.approx(-4.0 - 1.0 - 1.0)
    assert s[4] == pytest.approx(-2.0)
    assert len(heavy_sine(37)) == 37 and np.all(np.isfinite(heavy_sine(37)))


def test_heavy_sine_sign_zero_convention():
    # t = 0.3 hits the first jump exactly: sign(0) contributes 0
    s = heavy_sine(10)
    assert s[3] == pytest.approx(4 * np.sin(4 * np.pi * 0.3) - 0.0 - 1.0)


def test_awgn():
    z, sigma = add_awgn(np.zeros(10), 5.0, 0)
    assert sigma == 0.0 and np.array_equal(z, np.zeros(10))
    s = np.ones(100_000)
    noisy, sigma = add_awgn(s, 0.0, 1)
    assert sigma == 1.0
    assert np.std(noisy - s) == pytest.approx(1.0, rel=0.05)
    sig = heavy_sine(20_000)
    noisy, _ = add_awgn(sig, 7.0, 2)
    realised = 10 * np.log10(np.mean(sig ** 2) / np.mean((noisy - sig) ** 2))
    assert abs(realised - 7.0) < 0.2
    hi, _ = add_awgn(sig, 300.0, 3)
    np.testing.assert_allclose(hi, sig, atol=1e-12)


def test_bsnr():
    b = np.array([1.0, -1.0, 1.0, -1.0])
    assert sigma_from_bsnr(b, 0.0) == pytest.approx(1.0)
    assert sigma_from_bsnr(b, 40.0) == pytest.approx(0.01)
    with pytest.warns(RuntimeWarning):
        assert sigma_from_bsnr(np.full(5, 3.0), 40.0) == 0.0


def test_phantom():
    a = phantom(64, 48)
    assert a.shape == (64, 48)
    assert np.array_equal(a, phantom(64, 48))
    assert tv_2d(a) > 0
    assert 0 < a.mean() < 255 and a.min() >= 0 and a.max() <= 255


# --- metrics ---------------------------------------------------------------------


def test_error_metrics():
    a = np.array([3.0, 4.0])
    assert rmse(a, a) == 0.0 and mae(a, a) == 0.0
    assert rmse(a, 0 * a) == pytest.approx(np.sqrt(12.5))
    assert mae(a, 0 * a) == 3.5
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 100))
    assert rmse(x, y) >= mae(x, y)
    assert rmse(x, y) == rmse(y, x)


def test_psnr():
    img = np.arange(16.0).reshape(4, 4)
    assert psnr(img, img) == PSNR_CAP
    assert psnr(np.zeros(4), np.full(4, 255.0)) == pytest.approx(0.0)
    # the pair (31.23 dB, RMSE 7.035) is consistent with peak 255 up to rounding
    assert psnr(np.zeros(4), np.full(4, 7.035)) == pytest.approx(31.23, abs=0.05)
    assert psnr(np.zeros(4), np.full(4, 7.035), peak=1.0) < 0


def naive_ssim(x, y, L=255.0, size=11, sigma=1.5):
    """Direct double loop over window positions."""
    i = np.arange(size) - size // 2
    g = np.exp(-(i ** 2) / (2 * sigma ** 2))
    w = np.outer(g, g)
    w /= w.sum()
    c1, c2 = (0.01 * L) ** 2, (0.03 * L) ** 2
    vals = []
    for r in range(x.shape[0] - size + 1):
        for c in range(x.shape[1] - size + 1):
            px, py = x[r:r + size, c:c + size], y[r:r + size, c:c + size]
            mx, my = np.sum(w * px), np.sum(w * py)
            vx = np.sum(w * (px - mx) ** 2)
            vy = np.sum(w * (py - my) ** 2)
            cxy = np.sum(w * (px - mx) * (py - my))
            vals.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def test_ssim_against_direct_summation():
    board = (np.indices((24, 24)).sum(axis=0) % 2) * 255.0
    half = 0.5 * board + 64
    assert ssim(board, half) == pytest.approx(naive_ssim(board, half), abs=1e-9)
    rng = np.random.default_rng(1)
    a = rng.uniform(0, 255, (20, 17))
    b = a + rng.normal(0, 20, a.shape)
    assert ssim(a, b) == pytest.approx(naive_ssim(a, b), abs=1e-9)


def test_ssim_properties():
    img = phantom(32, 32)
    assert ssim(img, img) == pytest.approx(1.0)
    assert ssim(img, 255 - img) < 1
    with pytest.raises(ValueError):
        ssim(np.zeros((5, 5)), np.zeros((5, 5)))


# --- problems and solvers ------------------------------------------------------------


def test_denoise_1d_problem_is_consistent():
    prob = ex.denoise_1d_problem(64, 256, 6.0, np.random.default_rng(0))
    assert prob.op.domain_dim == 512 and prob.y.shape == (64,)
    assert prob.critical_frame == pytest.approx(prob.sigma / (2 * np.sqrt(2.5)))
    assert prob.critical_step == pytest.approx(np.sqrt(prob.mu) / 2)
    # mu = 3 / (2L) with L = w ||A||^2 = w
    assert prob.mu == pytest.approx(1.5 / prob.fidelity_weight)


def test_near_noiseless_1d_recovery():
    prob = ex.denoise_1d_problem(128, 512, 200.0, np.random.default_rng(0), fidelity_scale=1.0)
    res = ex.solve_problem(prob, CauchyPenalty(10.0), eps=1e-8, max_iter=2000)
    assert rmse(prob.clean, prob.estimate(res)) < 0.05


def test_run_denoise_1d_shapes_and_determinism():
    a = ex.run_denoise_1d(32, 64, 4.0, trials=3, seed=5)
    b = ex.run_denoise_1d(32, 64, 4.0, trials=3, seed=5, threads=3)
    for m in a.methods:
        assert a.rmse[m].shape == (3,)
        np.testing.assert_array_equal(a.rmse[m], b.rmse[m])
        np.testing.assert_array_equal(a.mae[m], b.mae[m])
        assert a.mean("rmse", m) == pytest.approx(a.rmse[m].mean())
    assert set(a.example) == {"clean", "noisy", "cauchy", "l1", "tv"}
    with pytest.raises(ValueError):
        ex.run_denoise_1d(32, 64, 4.0, methods=["wavelet"], trials=1)


def test_methods_share_noise():
    # the noisy trace is the same whichever methods are requested
    a = ex.run_denoise_1d(32, 64, 4.0, methods=["tv"], trials=1, seed=9)
    b = ex.run_denoise_1d(32, 64, 4.0, methods=["cauchy", "tv"], trials=1, seed=9)
    np.testing.assert_array_equal(a.example["noisy"], b.example["noisy"])
    np.testing.assert_array_equal(a.rmse["tv"], b.rmse["tv"])


def test_restore_identity_task():
    img = phantom(32, 32)
    est, met = ex.run_restore_2d(img, "deblur", CauchyPenalty(1e3), psf=Psf2D(np.ones((1, 1))),
                                 noise=False, eps=1e-6)
    np.testing.assert_allclose(est, img, atol=1e-2)
    assert met["psnr"] > 60


def test_restore_denoise_improves_phantom():
    img = phantom(64, 64)
    est, met = ex.run_restore_2d(img, "denoise", "cauchy", seed=0, gamma_multiplier=10.0)
    assert est.shape == img.shape
    assert met["psnr"] > met["input_psnr"]
    with pytest.raises(ValueError):
        ex.run_restore_2d(img, "inpaint", "cauchy")


def test_gamma_sweep_shape_and_reproducibility():
    prob = ex.denoise_1d_problem(32, 64, 10.0, np.random.default_rng(1))
    g = np.geomspace(0.01, 10, 6)
    a = ex.gamma_sweep(prob, g)
    b = ex.gamma_sweep(prob, g, threads=3)
    assert a.rmse.shape == g.shape and a.psnr is None
    np.testing.assert_array_equal(a.rmse, b.rmse)
    with pytest.raises(ValueError):
        ex.gamma_sweep(prob, g[::-1])


def test_sweep_reports_psnr_for_images():
    prob = ex.restore_2d_problem(phantom(32, 32), "denoise", np.random.default_rng(0))
    res = ex.best_gamma(prob, n=3, max_iter=20)
    assert res.psnr.shape == (3,)
    assert res.best_gamma == res.gammas[np.argmax(res.psnr)]
    assert res.critical_step == pytest.approx(np.sqrt(prob.mu) / 2)
    assert res.critical_frame == pytest.approx(prob.sigma / 2)
