"""Reconstruction quality metrics."""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

__all__ = ["rmse", "mae", "psnr", "ssim", "PSNR_CAP"]

# reported instead of +inf for identical images
PSNR_CAP = 99.0


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def rmse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mae(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def psnr(ref, est, peak: float = 255.0) -> float:
    """``20 log10(peak / rmse)``, capped at :data:`PSNR_CAP`."""
    e = rmse(ref, est)
    if e == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 20.0 * np.log10(peak / e)))


def _gaussian_window(size=11, sigma=1.5):
    i = np.arange(size) - size // 2
    g = np.exp(-(i ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(ref, est, data_range: float = 255.0, win_size: int = 11, sigma: float = 1.5,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity over all fully contained Gaussian windows.

    Uses the usual constants ``C1 = (k1 L)**2`` and ``C2 = (k2 L)**2`` and
    population (biased) local moments.
    """
    x, y = _pair(ref, est)
    if x.ndim != 2:
        raise ValueError("ssim expects 2-D images")
    if min(x.shape) < win_size:
        raise ValueError(f"images must be at least {win_size}x{win_size}")
    w = _gaussian_window(win_size, sigma)

    def filt(z):
        return convolve2d(z, w, mode="valid")

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
