"""Cauchy penalty, its closed-form proximal operator, and baseline proxes.

The Cauchy penalty is the negative log of the Cauchy density,

.. math::
   h(x) = \\log\\left(\\frac{\\gamma^2 + x^2}{\\gamma}\\right),

and its proximal operator solves the stationarity cubic

.. math::
   u^3 - x u^2 + (\\gamma^2 + 2\\mu) u - x \\gamma^2 = 0.

When the proximal objective is convex (``gamma >= sqrt(mu) / 2``) the cubic
has a single real root and Cardano's formula gives it directly. Otherwise
all three real roots are computed trigonometrically and the one with the
smallest objective is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "CauchyPenalty",
    "L1Penalty",
    "TVPenalty",
    "HardPenalty",
    "PenaltySpec",
    "cauchy_neglog",
    "cauchy_derivatives",
    "prox_objective",
    "prox_cauchy",
    "prox_cauchy_vec",
    "prox_l1",
    "prox_hard",
    "prox_tv_1d",
    "prox_tv_2d",
    "tv_1d",
    "tv_2d",
    "gamma_min_frame",
    "gamma_min_step",
]

# below this magnitude the prox returns exactly 0
_TINY = 1e-300


def _check_positive(name, value):
    value = np.asarray(value, dtype=float)
    if not np.all(value > 0):
        raise ValueError(f"{name} must be > 0, got {value!r}")


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("prox input must be finite")


def cauchy_neglog(x: ArrayLike, gamma: float) -> ArrayLike:
    """Negative log Cauchy density ``log((gamma**2 + x**2) / gamma)``."""
    _check_positive("gamma", gamma)
    x = np.asarray(x, dtype=float)
    out = np.log((gamma * gamma + x * x) / gamma)
    return out[()] if out.ndim == 0 else out


def cauchy_derivatives(x: ArrayLike, gamma: float) -> Tuple[ArrayLike, ArrayLike]:
    """First and second derivative of :func:`cauchy_neglog`.

    Returns
    -------
    h1, h2 : float or ndarray
        ``2x / (gamma**2 + x**2)`` and
        ``(2 gamma**2 - 2 x**2) / (gamma**2 + x**2)**2``.
    """
    _check_positive("gamma", gamma)
    x = np.asarray(x, dtype=float)
    g2 = gamma * gamma
    den = g2 + x * x
    h1 = 2.0 * x / den
    h2 = (2.0 * g2 - 2.0 * x * x) / (den * den)
    if x.ndim == 0:
        return h1[()], h2[()]
    return h1, h2


def prox_objective(u: ArrayLike, x: ArrayLike, gamma: float, mu: float) -> ArrayLike:
    """Objective minimised by the Cauchy prox, ``(x-u)**2/(2 mu) + h(u)``."""
    _check_positive("mu", mu)
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    out = (x - u) ** 2 / (2.0 * mu) + cauchy_neglog(u, gamma)
    return out[()] if np.ndim(out) == 0 else out


def _prox_cauchy_nonneg(a, g2, mu):
    """Cauchy prox for nonnegative inputs ``a`` (1-D float arrays).

    ``g2`` and ``mu`` are broadcast against ``a``.
    """
    c = g2 + 2.0 * mu
    # depressed cubic t**3 + p t + q = 0 with u = t + a/3 and q the
    # negative of the usual Cardano q (keeps the printed sign convention)
    p = c - a * a / 3.0
    q = a * g2 + 2.0 * a ** 3 / 27.0 - a * c / 3.0
    disc = p ** 3 / 27.0 + q * q / 4.0

    z = np.empty_like(a)
    one = disc >= 0
    if np.any(one):
        sq = np.sqrt(disc[one])
        qh = q[one] / 2.0
        s = np.cbrt(qh + sq)
        t = np.cbrt(qh - sq)
        z[one] = a[one] / 3.0 + s + t

    three = ~one
    if np.any(three):
        a3 = a[three]
        g3 = np.broadcast_to(g2, a.shape)[three]
        m3 = np.broadcast_to(mu, a.shape)[three]
        p3 = p[three]
        q3 = -q[three]  # standard-form constant term
        r = 2.0 * np.sqrt(-p3 / 3.0)
        arg = 3.0 * q3 / (p3 * r)
        theta = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
        roots = np.stack(
            [r * np.cos(theta - 2.0 * np.pi * k / 3.0) + a3 / 3.0 for k in range(3)]
        )
        roots = np.clip(roots, 0.0, a3)
        vals = (a3 - roots) ** 2 / (2.0 * m3) + np.log(g3 + roots * roots)
        # ties go to the smallest magnitude
        order = np.argsort(roots, axis=0, kind="stable")
        roots_sorted = np.take_along_axis(roots, order, axis=0)
        vals_sorted = np.take_along_axis(vals, order, axis=0)
        best = np.argmin(vals_sorted, axis=0)
        z[three] = np.take_along_axis(roots_sorted, best[None, :], axis=0)[0]

    # one Newton step on the cubic, kept only when it reduces the residual
    g2b = np.broadcast_to(g2, a.shape)
    cb = np.broadcast_to(c, a.shape)
    res = ((z - a) * z + cb) * z - a * g2b
    der = (3.0 * z - 2.0 * a) * z + cb
    with np.errstate(divide="ignore", invalid="ignore"):
        zn = z - res / der
    resn = ((zn - a) * zn + cb) * zn - a * g2b
    better = (
        np.isfinite(zn)
        & (np.abs(resn) < np.abs(res))
        & (np.abs(zn - z) <= 1e-6 * np.maximum(1.0, a))
        & (zn >= 0)
        & (zn <= a)
    )
    z = np.where(better, zn, z)
    return np.clip(z, 0.0, a)


def prox_cauchy(x: ArrayLike, gamma: ArrayLike, mu: ArrayLike) -> ArrayLike:
    """Proximal operator of the Cauchy penalty.

    Parameters
    ----------
    x : float or ndarray
        Input point(s); the operator acts elementwise.
    gamma : float or ndarray
        Cauchy scale parameter, > 0.
    mu : float or ndarray
        Step size, > 0.

    Returns
    -------
    float or ndarray
        ``argmin_u (x - u)**2 / (2 mu) + log(gamma**2 + u**2)``. The result
        has the sign of ``x`` (or is 0) and never exceeds ``|x|``.
        ``prox_cauchy(-x) == -prox_cauchy(x)`` holds exactly.
    """
    _check_positive("gamma", gamma)
    _check_positive("mu", mu)
    xa = np.asarray(x, dtype=float)
    _check_finite(xa)
    scalar = xa.ndim == 0
    flat = np.atleast_1d(xa).ravel()
    shape = np.atleast_1d(xa).shape
    g2 = np.asarray(gamma, dtype=float) ** 2
    mu = np.asarray(mu, dtype=float)
    if g2.ndim:
        g2 = np.broadcast_to(g2, shape).ravel()
    if mu.ndim:
        mu = np.broadcast_to(mu, shape).ravel()

    a = np.abs(flat)
    z = np.zeros_like(a)
    nz = a >= _TINY
    if np.any(nz):
        gs = g2[nz] if g2.ndim else g2
        ms = mu[nz] if mu.ndim else mu
        z[nz] = _prox_cauchy_nonneg(a[nz], gs, ms)
    out = np.copysign(z, flat)
    out[z == 0] = 0.0
    out = out.reshape(shape)
    return out[0] if scalar else out


def prox_cauchy_vec(xs, gamma: float, mu: float) -> np.ndarray:
    """Elementwise Cauchy prox of a vector; length is preserved."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return prox_cauchy(xs, gamma, mu)


def prox_l1(x: ArrayLike, t: float) -> ArrayLike:
    """Soft threshold ``sign(x) * max(|x| - t, 0)``."""
    _check_positive("t", t)
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return out[()] if out.ndim == 0 else out


def prox_hard(x: ArrayLike, t: float) -> ArrayLike:
    """Hard threshold: keep ``x`` where ``|x| >= t``, zero elsewhere."""
    _check_positive("t", t)
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) >= t, x, 0.0)
    return out[()] if out.ndim == 0 else out


# --- total variation -------------------------------------------------------


def _grad_1d(u):
    g = np.zeros_like(u)
    g[:-1] = u[1:] - u[:-1]
    return g


def _div_1d(p):
    # negative adjoint of _grad_1d
    d = np.empty_like(p)
    d[0] = p[0]
    d[1:-1] = p[1:-1] - p[:-2]
    d[-1] = -p[-2]
    return d


def _grad_2d(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def _div_2d(px, py):
    dx = np.zeros_like(px)
    if px.shape[0] > 1:
        dx[0, :] = px[0, :]
        dx[1:-1, :] = px[1:-1, :] - px[:-2, :]
        dx[-1, :] = -px[-2, :]
    dy = np.zeros_like(py)
    if py.shape[1] > 1:
        dy[:, 0] = py[:, 0]
        dy[:, 1:-1] = py[:, 1:-1] - py[:, :-2]
        dy[:, -1] = -py[:, -2]
    return dx + dy


def tv_1d(x) -> float:
    """Discrete total variation ``sum |x[i+1] - x[i]|``."""
    return float(np.sum(np.abs(np.diff(np.asarray(x, dtype=float)))))


def tv_2d(img) -> float:
    """Isotropic discrete TV with forward differences and Neumann boundary."""
    gx, gy = _grad_2d(np.asarray(img, dtype=float))
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def prox_tv_1d(xs, lam: float, inner_iters: int = 100, inner_tol: float = 1e-6):
    """1-D TV denoising by Chambolle's dual projection (step 1/4).

    Approximately solves ``min_u ||xs - u||**2 / 2 + lam * tv_1d(u)``.
    The output mean equals the input mean up to rounding.
    """
    _check_positive("lam", lam)
    if inner_iters < 1:
        raise ValueError("inner_iters must be >= 1")
    g = np.asarray(xs, dtype=float)
    if g.size < 2:
        return g.copy()
    tau = 0.25
    p = np.zeros_like(g)
    for _ in range(inner_iters):
        w = _grad_1d(_div_1d(p) - g / lam)
        p_new = (p + tau * w) / (1.0 + tau * np.abs(w))
        change = np.max(np.abs(p_new - p))
        p = p_new
        if change <= inner_tol:
            break
    return g - lam * _div_1d(p)


def prox_tv_2d(img, lam: float, inner_iters: int = 100, inner_tol: float = 1e-6):
    """Isotropic 2-D TV denoising by Chambolle's dual projection (step 1/8).

    Parameters
    ----------
    img : ndarray, shape (rows, cols)
        Input image.
    lam : float
        Regularisation weight, > 0.
    inner_iters : int
        Maximum number of dual iterations.
    inner_tol : float
        Stop once the largest dual-variable update is below this value.

    Returns
    -------
    ndarray
        Approximate minimiser of ``||img - u||**2 / 2 + lam * tv_2d(u)``.
    """
    _check_positive("lam", lam)
    if inner_iters < 1:
        raise ValueError("inner_iters must be >= 1")
    g = np.asarray(img, dtype=float)
    if g.ndim != 2:
        raise ValueError("expected a 2-D image")
    tau = 0.125
    px = np.zeros_like(g)
    py = np.zeros_like(g)
    for _ in range(inner_iters):
        wx, wy = _grad_2d(_div_2d(px, py) - g / lam)
        norm = 1.0 + tau * np.sqrt(wx * wx + wy * wy)
        px_new = (px + tau * wx) / norm
        py_new = (py + tau * wy) / norm
        change = max(np.max(np.abs(px_new - px)), np.max(np.abs(py_new - py)))
        px, py = px_new, py_new
        if change <= inner_tol:
            break
    return g - lam * _div_2d(px, py)


# --- convexity conditions ----------------------------------------------------


def gamma_min_frame(sigma: float, r: float) -> float:
    """Smallest scale keeping the full cost convex for a tight frame,
    ``sigma / (2 sqrt(r))``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    _check_positive("r", r)
    return float(sigma) / (2.0 * np.sqrt(r))


def gamma_min_step(mu: float) -> float:
    """Smallest scale keeping the prox objective convex, ``sqrt(mu) / 2``."""
    _check_positive("mu", mu)
    return float(np.sqrt(mu)) / 2.0


# --- penalty objects ---------------------------------------------------------


@dataclass(frozen=True)
class CauchyPenalty:
    """Cauchy penalty ``sum_i log((gamma**2 + x_i**2) / gamma)``."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")

    def value(self, x) -> float:
        return float(np.sum(cauchy_neglog(np.asarray(x, dtype=float), self.gamma)))

    def prox(self, v, mu: float):
        return prox_cauchy(v, self.gamma, mu)


@dataclass(frozen=True)
class L1Penalty:
    """``lam * ||x||_1``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam!r}")

    def value(self, x) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, v, mu: float):
        return prox_l1(v, self.lam * mu)


@dataclass(frozen=True)
class HardPenalty:
    """``lam * ||x||_0``; its prox is a hard threshold at ``sqrt(2 lam mu)``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam!r}")

    def value(self, x) -> float:
        return self.lam * float(np.count_nonzero(x))

    def prox(self, v, mu: float):
        return prox_hard(v, np.sqrt(2.0 * self.lam * mu))


@dataclass(frozen=True)
class TVPenalty:
    """``lam * TV(x)``.

    ``shape`` reshapes the flat iterate into an image; ``None`` means 1-D.
    """

    lam: float
    inner_iters: int = 100
    inner_tol: float = 1e-6
    shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam!r}")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be > 0")

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.shape is None:
            return self.lam * tv_1d(x.ravel())
        return self.lam * tv_2d(x.reshape(self.shape))

    def prox(self, v, mu: float):
        v = np.asarray(v, dtype=float)
        lam = self.lam * mu
        if self.shape is None:
            return prox_tv_1d(v.ravel(), lam, self.inner_iters, self.inner_tol).reshape(v.shape)
        out = prox_tv_2d(v.reshape(self.shape), lam, self.inner_iters, self.inner_tol)
        return out.reshape(v.shape)


PenaltySpec = Union[CauchyPenalty, L1Penalty, TVPenalty, HardPenalty]
