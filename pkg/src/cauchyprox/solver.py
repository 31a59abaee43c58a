"""Forward-backward splitting with Cauchy and baseline penalties.

Solves

.. math::
   \\min_x \\; \\frac{w}{2} \\|y - A x\\|_2^2 + \\psi(x)

by iterating ``x <- prox_psi^mu(x - mu * w * A^T (A x - y))``. With the
Cauchy penalty and ``gamma >= sqrt(mu) / 2`` every prox sub-problem is
strictly convex.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .linops import LinearOperator
from .penalties import CauchyPenalty, PenaltySpec, cauchy_derivatives, gamma_min_step

__all__ = [
    "FBConfig",
    "FBResult",
    "DivergenceError",
    "StepSizeWarning",
    "ConvexityWarning",
    "fb_solve",
    "cps_solve",
    "cost_eval",
    "step_size_policy",
    "gamma_policy",
    "hessian_check_frame",
    "fixed_point_residual",
]

logger = logging.getLogger(__name__)


class DivergenceError(ArithmeticError):
    """Non-finite values appeared in the iterates."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class StepSizeWarning(UserWarning):
    """Step size outside ``(0, 2/L)``."""


class ConvexityWarning(UserWarning):
    """Cauchy scale below ``sqrt(mu)/2``; prox sub-problems may be non-convex."""


@dataclass
class FBConfig:
    """Parameters of a forward-backward run.

    Attributes
    ----------
    mu : float
        Step size; convergence needs ``0 < mu < 2 / L`` with
        ``L = fidelity_weight * ||A||**2``.
    eps : float
        Relative-change stopping tolerance.
    max_iter : int
        Iteration cap.
    fidelity_weight : float
        Weight ``w`` of the quadratic data term, ``1 / sigma**2`` for the
        Gaussian likelihood.
    x0 : ndarray, optional
        Starting point; zeros when ``None``.
    record_history : bool
        Record the cost at every iterate (one extra forward pass each).
    check_step : bool
        Warn when ``mu`` is outside ``(0, 2/L)``. Needs ``||A||**2``, which
        is estimated once per operator and cached.
    """

    mu: float
    eps: float = 1e-3
    max_iter: int = 500
    fidelity_weight: float = 1.0
    x0: Optional[np.ndarray] = None
    record_history: bool = False
    check_step: bool = True

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu!r}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.fidelity_weight > 0:
            raise ValueError("fidelity_weight must be > 0")


@dataclass
class FBResult:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    rel_changes: List[float] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)


def cost_eval(x, y, op: LinearOperator, penalty: PenaltySpec, fidelity_weight: float = 1.0) -> float:
    """``w * ||y - A x||**2 / 2 + penalty(x)``."""
    r = np.asarray(y, dtype=float) - op.apply(x)
    return 0.5 * fidelity_weight * float(r @ r) + penalty.value(x)


def _check_dims(y, op, x0):
    if y.shape != (op.range_dim,):
        raise ValueError(f"y has shape {y.shape}, operator range is {op.range_dim}")
    if x0 is not None and np.shape(x0) != (op.domain_dim,):
        raise ValueError(f"x0 has shape {np.shape(x0)}, operator domain is {op.domain_dim}")


def fb_solve(y, op: LinearOperator, penalty: PenaltySpec, cfg: FBConfig) -> FBResult:
    """Forward-backward splitting with any penalty exposing ``prox`` and ``value``.

    The loop stops at the first iteration whose relative change
    ``||x_i - x_{i-1}|| / ||x_{i-1}||`` is ``<= cfg.eps``, or after
    ``cfg.max_iter`` iterations. A zero previous iterate gives an infinite
    relative change unless the new iterate is also zero.

    Raises
    ------
    ValueError
        On dimension mismatch.
    DivergenceError
        If an iterate contains NaN or inf.
    """
    y = np.asarray(y, dtype=float)
    _check_dims(y, op, cfg.x0)
    mu = cfg.mu
    w = cfg.fidelity_weight

    if cfg.check_step:
        L = w * op.norm_sq()
        if mu >= 2.0 / L:
            warnings.warn(f"mu={mu:g} is not below 2/L={2.0 / L:g}", StepSizeWarning, stacklevel=2)

    x = np.zeros(op.domain_dim) if cfg.x0 is None else np.array(cfg.x0, dtype=float)
    rel_changes: List[float] = []
    costs: List[float] = []
    if cfg.record_history:
        costs.append(cost_eval(x, y, op, penalty, w))

    step = mu * w
    converged = False
    it = 0
    while it < cfg.max_iter:
        u = x - step * op.adjoint(op.apply(x) - y)
        x_new = penalty.prox(u, mu)
        it += 1
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(it)
        num = np.linalg.norm(x_new - x)
        den = np.linalg.norm(x)
        if den > 0:
            rel = num / den
        else:
            rel = 0.0 if num == 0 else np.inf
        rel_changes.append(float(rel))
        x = x_new
        if cfg.record_history:
            costs.append(cost_eval(x, y, op, penalty, w))
        if rel <= cfg.eps:
            converged = True
            break

    logger.debug("fb_solve: %d iterations, converged=%s", it, converged)
    return FBResult(x, it, converged, rel_changes, costs)


def cps_solve(y, op: LinearOperator, penalty: CauchyPenalty, cfg: FBConfig) -> FBResult:
    """Cauchy proximal splitting.

    Same iteration as :func:`fb_solve` with the Cauchy prox. Issues a
    :class:`ConvexityWarning` when ``penalty.gamma < sqrt(cfg.mu) / 2``.
    """
    if not isinstance(penalty, CauchyPenalty):
        raise TypeError("cps_solve needs a CauchyPenalty")
    if penalty.gamma < gamma_min_step(cfg.mu):
        warnings.warn(
            f"gamma={penalty.gamma:g} < sqrt(mu)/2={gamma_min_step(cfg.mu):g}",
            ConvexityWarning,
            stacklevel=2,
        )
    return fb_solve(y, op, penalty, cfg)


def fixed_point_residual(x, y, op: LinearOperator, penalty: PenaltySpec, mu: float, fidelity_weight: float = 1.0) -> float:
    """``||x - prox(x - mu w A^T(Ax - y))|| / max(1, ||x||)``."""
    x = np.asarray(x, dtype=float)
    u = x - mu * fidelity_weight * op.adjoint(op.apply(x) - np.asarray(y, dtype=float))
    return float(np.linalg.norm(x - penalty.prox(u, mu)) / max(1.0, np.linalg.norm(x)))


def step_size_policy(L: float, factor: float = 1.5) -> float:
    """``factor / L``; the default gives ``mu = 3 / (2L)``."""
    if not L > 0:
        raise ValueError("L must be > 0")
    if not 0 < factor < 2:
        raise ValueError("factor must lie in (0, 2)")
    return factor / L


def gamma_policy(mu: float, multiplier: float = 10.0) -> float:
    """``multiplier * sqrt(mu) / 2``.

    Multipliers outside ``[1, 50]`` are allowed but warned about: below 1
    the prox loses convexity, above 50 results usually degrade.
    """
    if not 1.0 <= multiplier <= 50.0:
        warnings.warn(f"gamma multiplier {multiplier:g} outside [1, 50]", ConvexityWarning, stacklevel=2)
    if not multiplier > 0:
        raise ValueError("multiplier must be > 0")
    return multiplier * gamma_min_step(mu)


def hessian_check_frame(op: LinearOperator, sigma: float, gamma: float, grid) -> float:
    """Smallest diagonal Hessian entry ``r / sigma**2 + h''(u)`` over ``grid``.

    Nonnegative exactly when ``gamma >= sigma / (2 sqrt(r))`` (up to grid
    resolution). Requires ``op.frame_constant``.
    """
    if op.frame_constant is None:
        raise ValueError("operator has no frame constant")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    _, h2 = cauchy_derivatives(np.asarray(grid, dtype=float), gamma)
    return float(np.min(op.frame_constant / sigma ** 2 + h2))
