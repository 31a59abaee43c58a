"""Linear forward models with adjoints.

Every operator maps flat real vectors of length ``domain_dim`` to flat real
vectors of length ``range_dim``. Complex quantities are carried as stacked
``[real; imag]`` real vectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "LinearOperator",
    "IdentityOp",
    "DenseOp",
    "PartialIDFT",
    "Conv2D",
    "Psf2D",
    "RealCompositeOp",
    "make_partial_idft",
    "make_conv2d",
    "gaussian_psf",
    "opnorm_sq",
    "dot_test",
    "complex_to_real_matrix",
    "PowerIterationWarning",
]


class PowerIterationWarning(RuntimeWarning):
    """Power iteration hit its iteration cap before reaching tolerance."""


class LinearOperator:
    """Base class. Subclasses implement ``_apply`` and ``_adjoint``."""

    kind = "Generic"

    def __init__(self, domain_dim: int, range_dim: int, frame_constant: Optional[float] = None):
        self.domain_dim = int(domain_dim)
        self.range_dim = int(range_dim)
        self.frame_constant = frame_constant
        self._norm_sq = None

    def __repr__(self):
        return f"{type(self).__name__}({self.range_dim}x{self.domain_dim})"

    @property
    def shape(self):
        return (self.range_dim, self.domain_dim)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.domain_dim,):
            raise ValueError(f"expected input of length {self.domain_dim}, got shape {x.shape}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.range_dim,):
            raise ValueError(f"expected input of length {self.range_dim}, got shape {y.shape}")
        return self._adjoint(y)

    def normal(self, x):
        """``A^T A x``."""
        return self.adjoint(self.apply(x))

    def norm_sq(self) -> float:
        """Cached estimate of the largest eigenvalue of ``A^T A``."""
        if self._norm_sq is None:
            self._norm_sq = opnorm_sq(self)
        return self._norm_sq

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError


class IdentityOp(LinearOperator):
    kind = "Identity"

    def __init__(self, n: int):
        super().__init__(n, n, frame_constant=1.0)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class DenseOp(LinearOperator):
    """Explicit real matrix. Pass ``frame_constant`` only if ``A^T A = r I``."""

    kind = "Dense"

    def __init__(self, matrix, frame_constant: Optional[float] = None):
        self.matrix = np.array(matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        m, n = self.matrix.shape
        super().__init__(n, m, frame_constant)

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y


class PartialIDFT(LinearOperator):
    """Real part of the first ``M`` rows of the unitary length-``N`` inverse DFT.

    Input is the stacked spectrum ``[Re X; Im X]`` of length ``2N``; output is
    ``Re(sum_k X_k exp(2j pi m k / N) / sqrt(N))`` for ``m = 0..M-1``.
    ``apply(adjoint(y)) == y`` holds for any real ``y``, so the range-side
    frame bound is 1; ``A^T A`` is a projection and no domain-side frame
    constant is set.
    """

    kind = "PartialIDFT"

    def __init__(self, M: int, N: int):
        if not 1 <= M <= N:
            raise ValueError("need 1 <= M <= N")
        self.M = int(M)
        self.N = int(N)
        super().__init__(2 * self.N, self.M)
        self._scale = np.sqrt(self.N)

    def _apply(self, x):
        spec = x[: self.N] + 1j * x[self.N :]
        return (np.fft.ifft(spec) * self._scale)[: self.M].real

    def _adjoint(self, y):
        w = np.fft.fft(y, n=self.N) / self._scale
        return np.concatenate([w.real, w.imag])

    def spectrum_of(self, signal):
        """Spectrum ``x = A^T s`` that reproduces ``s`` exactly under ``apply``."""
        return self.adjoint(signal)


@dataclass(frozen=True)
class Psf2D:
    """Convolution kernel with odd side lengths, centred on the middle tap."""

    taps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
            raise ValueError("PSF must be 2-D with odd side lengths")
        if self.normalized and not np.isclose(taps.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("normalized PSF taps must sum to 1")
        object.__setattr__(self, "taps", taps)


def gaussian_psf(side: int = 5, sigma_psf: float = 1.0) -> Psf2D:
    """Sampled Gaussian ``exp(-(i**2 + j**2) / (2 sigma**2))``, normalised to sum 1."""
    if side < 1 or side % 2 == 0:
        raise ValueError("side must be a positive odd integer")
    if sigma_psf <= 0:
        raise ValueError("sigma_psf must be > 0")
    h = side // 2
    i = np.arange(-h, h + 1, dtype=float)
    k = np.exp(-(i[:, None] ** 2 + i[None, :] ** 2) / (2.0 * sigma_psf ** 2))
    return Psf2D(k / k.sum(), normalized=True)


class Conv2D(LinearOperator):
    """Circular 2-D convolution of a ``rows x cols`` image (flattened row-major)."""

    kind = "Conv2D"

    def __init__(self, psf: Psf2D, rows: int, cols: int):
        taps = psf.taps
        kr, kc = taps.shape
        if kr > rows or kc > cols:
            raise ValueError("PSF larger than image")
        self.rows, self.cols = int(rows), int(cols)
        self.psf = psf
        super().__init__(self.rows * self.cols, self.rows * self.cols)
        kernel = np.zeros((self.rows, self.cols))
        kernel[:kr, :kc] = taps
        # put the centre tap at (0, 0)
        kernel = np.roll(kernel, (-(kr // 2), -(kc // 2)), axis=(0, 1))
        self.transfer = np.fft.rfft2(kernel)

    def _apply(self, x):
        img = x.reshape(self.rows, self.cols)
        out = np.fft.irfft2(np.fft.rfft2(img) * self.transfer, s=img.shape)
        return out.ravel()

    def _adjoint(self, y):
        img = y.reshape(self.rows, self.cols)
        out = np.fft.irfft2(np.fft.rfft2(img) * np.conj(self.transfer), s=img.shape)
        return out.ravel()

    def transfer_norm_sq(self) -> float:
        """Exact largest eigenvalue of ``A^T A`` from the FFT diagonalisation."""
        return float(np.max(np.abs(self.transfer) ** 2))


class RealCompositeOp(LinearOperator):
    """Complex matrix ``H`` acting on ``batch`` stacked real-composite vectors.

    The flat input holds ``batch`` consecutive blocks ``[Re e; Im e]`` of
    length ``2n``; each block is mapped to ``[Re He; Im He]`` of length ``2m``.
    """

    kind = "RealComposite"

    def __init__(self, H, batch: int = 1):
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2:
            raise ValueError("H must be 2-D")
        if batch < 1:
            raise ValueError("batch must be >= 1")
        self.H = H
        self.batch = int(batch)
        self.matrix = complex_to_real_matrix(H)
        m2, n2 = self.matrix.shape
        super().__init__(n2 * self.batch, m2 * self.batch)

    def _apply(self, x):
        return (x.reshape(self.batch, -1) @ self.matrix.T).ravel()

    def _adjoint(self, y):
        return (y.reshape(self.batch, -1) @ self.matrix).ravel()

    def norm_sq(self) -> float:
        if self._norm_sq is None:
            self._norm_sq = float(np.linalg.norm(self.H, 2) ** 2)
        return self._norm_sq


def make_partial_idft(M: int, N: int) -> PartialIDFT:
    return PartialIDFT(M, N)


def make_conv2d(psf: Psf2D, rows: int, cols: int) -> Conv2D:
    return Conv2D(psf, rows, cols)


def complex_to_real_matrix(H) -> np.ndarray:
    """Real-composite form ``[[Re H, -Im H], [Im H, Re H]]`` of a complex matrix."""
    H = np.asarray(H)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def opnorm_sq(op: LinearOperator, tol: float = 1e-6, max_iter: int = 200, seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration.

    The start vector is drawn from ``U(0.5, 1.5)`` with the given seed, so the
    result is reproducible. Iteration stops once the relative change of the
    Rayleigh quotient, and the geometric extrapolation of the changes still
    to come, are both below ``tol``. If ``max_iter`` is reached first the
    last estimate is returned and a :class:`PowerIterationWarning` is issued.
    """
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.5, 1.5, op.domain_dim)
    v /= np.linalg.norm(v)
    est = 0.0
    prev_change = np.inf
    for _ in range(max_iter):
        w = op.normal(v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        change = abs(new - est)
        est = new
        ratio = change / prev_change if prev_change > 0 else 0.0
        # factor 2 covers the slower-than-geometric decay seen for
        # clustered spectra (circulant blurs)
        tail = 2.0 * change * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
        if max(change, tail) <= tol * abs(new):
            return new
        prev_change = change
    warnings.warn(
        f"power iteration did not reach tol={tol} in {max_iter} iterations",
        PowerIterationWarning,
        stacklevel=2,
    )
    return est


def dot_test(op: LinearOperator, trials: int = 5, seed: int = 0) -> float:
    """Worst normalised adjoint mismatch ``|<Ax,y> - <x,A^T y>| / (|x| |y|)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.domain_dim)
        y = rng.standard_normal(op.range_dim)
        lhs = float(op.apply(x) @ y)
        rhs = float(x @ op.adjoint(y))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst
