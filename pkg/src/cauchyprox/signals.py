"""Test signals, test images and calibrated noise."""

from __future__ import annotations

import warnings
from typing import Tuple, Union

import numpy as np

__all__ = ["heavy_sine", "phantom", "add_awgn", "sigma_from_bsnr", "make_rng"]

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Generator from an int, a SeedSequence, or pass an existing Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def heavy_sine(M: int) -> np.ndarray:
    """Heavy Sine test signal ``4 sin(4 pi t) - sign(t - 0.3) - sign(0.72 - t)``.

    Sampled at ``t = k / M`` for ``k = 0..M-1``, with ``sign(0) = 0``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    t = np.arange(M) / M
    return 4.0 * np.sin(4.0 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t)


# modified Shepp-Logan ellipses: (value, a, b, x0, y0, angle in degrees)
_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def phantom(rows: int = 256, cols: int = 256) -> np.ndarray:
    """Piecewise-constant ellipse phantom (modified Shepp-Logan) in ``[0, 255]``.

    Free to redistribute, unlike the usual photographic test images, and
    fully determined by its size.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    yy = np.linspace(1.0, -1.0, rows)[:, None]
    xx = np.linspace(-1.0, 1.0, cols)[None, :]
    img = np.zeros((rows, cols))
    for val, a, b, x0, y0, ang in _ELLIPSES:
        th = np.deg2rad(ang)
        c, s = np.cos(th), np.sin(th)
        xr = (xx - x0) * c + (yy - y0) * s
        yr = -(xx - x0) * s + (yy - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += val
    return np.clip(img, 0.0, 1.0) * 255.0


def add_awgn(s, snr_db: float, seed: SeedLike = None) -> Tuple[np.ndarray, float]:
    """Add white Gaussian noise at a target SNR.

    The noise variance is ``mean(s**2) / 10**(snr_db / 10)``.

    Returns
    -------
    noisy : ndarray
    sigma : float
        Noise standard deviation used.
    """
    s = np.asarray(s, dtype=float)
    power = float(np.mean(s * s))
    sigma = float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))
    rng = make_rng(seed)
    noise = rng.standard_normal(s.shape)
    if sigma == 0.0:
        return s.copy(), 0.0
    return s + sigma * noise, sigma


def sigma_from_bsnr(blurred, bsnr_db: float) -> float:
    """Noise level for a blurred-signal SNR, ``sqrt(var(blurred) / 10**(bsnr/10))``.

    Uses the population variance. A constant input gives 0 with a warning.
    """
    v = float(np.var(np.asarray(blurred, dtype=float)))
    if v == 0.0:
        warnings.warn("constant blurred signal: BSNR is undefined, using sigma = 0", RuntimeWarning, stacklevel=2)
    return float(np.sqrt(v / 10.0 ** (bsnr_db / 10.0)))
