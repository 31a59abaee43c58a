import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from cauchyprox.linops import DenseOp, IdentityOp, opnorm_sq
from cauchyprox.penalties import CauchyPenalty, L1Penalty, TVPenalty, cauchy_neglog, prox_l1, prox_tv_1d
from cauchyprox.solver import (
    ConvexityWarning,
    DivergenceError,
    FBConfig,
    StepSizeWarning,
    cost_eval,
    cps_solve,
    fb_solve,
    fixed_point_residual,
    gamma_policy,
    hessian_check_frame,
    step_size_policy,
)


class Exploding(L1Penalty):
    """Penalty whose prox returns inf on the third call."""

    def __init__(self):
        super().__init__(1.0)
        object.__setattr__(self, "calls", [0])

    def prox(self, v, mu):
        self.calls[0] += 1
        return v * np.inf if self.calls[0] == 3 else v


def test_config_validation():
    with pytest.raises(ValueError):
        FBConfig(mu=0.0)
    with pytest.raises(ValueError):
        FBConfig(mu=1.0, eps=0.0)
    with pytest.raises(ValueError):
        FBConfig(mu=1.0, max_iter=0)


def test_policies():
    assert step_size_policy(1.0) == 1.5
    assert step_size_policy(2.0) == 0.75
    assert step_size_policy(1.0, 1.0) == 1.0
    assert gamma_policy(1.0, 1) == 0.5
    assert gamma_policy(1.0, 50) == 25.0
    assert gamma_policy(0.04, 10) == pytest.approx(1.0)
    with pytest.warns(ConvexityWarning):
        gamma_policy(1.0, 0.5)
    with pytest.raises(ValueError):
        step_size_policy(1.0, 2.0)


def test_hessian_check_frame():
    grid = np.linspace(-5, 5, 200_001)
    op1, op4 = IdentityOp(3), IdentityOp(3)
    op4.frame_constant = 4.0
    assert hessian_check_frame(op1, 0.2, 0.1, grid) >= -1e-12
    assert hessian_check_frame(op1, 0.2, 0.05, grid) < 0
    assert hessian_check_frame(op4, 1.0, 0.25, grid) >= -1e-12


def test_cost_eval():
    op = IdentityOp(3)
    assert cost_eval(np.zeros(3), np.zeros(3), op, CauchyPenalty(1.0)) == 0.0
    y = np.array([1.0, -2.0, 0.5])
    assert cost_eval(y, y, op, CauchyPenalty(2.0)) == pytest.approx(np.sum(cauchy_neglog(y, 2.0)))
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 3))
    x, yy = rng.standard_normal(3), rng.standard_normal(4)
    ref = 0.5 * 3.0 * np.sum((yy - A @ x) ** 2) + np.sum(np.log((0.7 ** 2 + x ** 2) / 0.7))
    assert cost_eval(x, yy, DenseOp(A), CauchyPenalty(0.7), 3.0) == pytest.approx(ref, rel=1e-12)


def test_zero_problem_stops_immediately():
    res = cps_solve(np.zeros(5), IdentityOp(5), CauchyPenalty(1.0), FBConfig(mu=1.0))
    assert res.iterations == 1 and res.converged
    np.testing.assert_array_equal(res.x_hat, 0.0)


def test_zero_previous_iterate_gives_infinite_change():
    res = fb_solve(np.ones(4), IdentityOp(4), L1Penalty(0.1), FBConfig(mu=1.0))
    assert res.rel_changes[0] == np.inf
    assert res.iterations >= 2


def test_identity_large_gamma_against_scalar_minimisation():
    y = np.array([3.0, -1.5, 0.4, 7.0])
    gamma = 1e3 * np.abs(y).max()
    res = cps_solve(y, IdentityOp(4), CauchyPenalty(gamma), FBConfig(mu=1.0, eps=1e-10, max_iter=1000))
    ref = [minimize_scalar(lambda u, v=v: 0.5 * (v - u) ** 2 + cauchy_neglog(u, gamma),
                           bracket=(v - 1, v + 1)).x for v in y]
    np.testing.assert_allclose(res.x_hat, ref, atol=1e-6)
    np.testing.assert_allclose(res.x_hat, y, rtol=1e-2)


def test_l1_identity_one_step_is_soft_threshold():
    y = np.array([3.0, -0.2, -2.0, 0.9])
    res = fb_solve(y, IdentityOp(4), L1Penalty(0.5), FBConfig(mu=1.0))
    np.testing.assert_allclose(res.x_hat, prox_l1(y, 0.5))


def test_tv_identity_equals_direct_prox():
    y = np.random.default_rng(1).standard_normal(20)
    res = fb_solve(y, IdentityOp(20), TVPenalty(0.3), FBConfig(mu=1.0))
    np.testing.assert_allclose(res.x_hat, prox_tv_1d(y, 0.3))


def test_l1_dense_against_long_run():
    rng = np.random.default_rng(2)
    A = DenseOp(rng.standard_normal((10, 20)))
    y = rng.standard_normal(10)
    pen = L1Penalty(0.3)
    mu = step_size_policy(opnorm_sq(A))
    short = fb_solve(y, A, pen, FBConfig(mu=mu, eps=1e-8, max_iter=2000))
    ref = fb_solve(y, A, pen, FBConfig(mu=mu, eps=1e-300, max_iter=5000))
    c_ref = cost_eval(ref.x_hat, y, A, pen)
    assert abs(cost_eval(short.x_hat, y, A, pen) - c_ref) <= 1e-4 * max(1.0, abs(c_ref))


def test_monotone_cost_with_small_step():
    rng = np.random.default_rng(3)
    A = DenseOp(rng.standard_normal((30, 40)))
    y = rng.standard_normal(30)
    mu = 1.0 / opnorm_sq(A)
    cfg = FBConfig(mu=mu, eps=1e-9, max_iter=300, record_history=True)
    res = cps_solve(y, A, CauchyPenalty(np.sqrt(mu) / 2), cfg)
    assert np.all(np.diff(res.costs) <= 1e-10)
    assert len(res.costs) == res.iterations + 1


def test_fixed_point_residual_at_exit():
    rng = np.random.default_rng(4)
    A = DenseOp(rng.standard_normal((15, 25)))
    y = rng.standard_normal(15)
    w = 4.0
    mu = step_size_policy(w * opnorm_sq(A))
    pen = CauchyPenalty(3 * np.sqrt(mu) / 2)
    cfg = FBConfig(mu=mu, eps=1e-3, max_iter=500, fidelity_weight=w)
    res = cps_solve(y, A, pen, cfg)
    assert res.converged and res.rel_changes[-1] <= cfg.eps
    assert fixed_point_residual(res.x_hat, y, A, pen, mu, w) <= 10 * cfg.eps


def test_stops_exactly_at_tolerance_or_cap():
    y = np.random.default_rng(5).standard_normal(30)
    cfg = FBConfig(mu=0.2, eps=1e-4, max_iter=1000)
    res = cps_solve(y, IdentityOp(30), CauchyPenalty(1.0), cfg)
    assert all(r > cfg.eps for r in res.rel_changes[:-1]) and res.rel_changes[-1] <= cfg.eps
    capped = cps_solve(y, IdentityOp(30), CauchyPenalty(1.0), FBConfig(mu=0.2, eps=1e-12, max_iter=3))
    assert capped.iterations == 3 and not capped.converged


def test_global_minimum_from_two_starts():
    y = np.random.default_rng(6).standard_normal(50) * 3
    op = IdentityOp(50)
    pen = CauchyPenalty(0.5)
    base = dict(mu=1.0, eps=1e-12, max_iter=5000)
    a = cps_solve(y, op, pen, FBConfig(**base))
    b = cps_solve(y, op, pen, FBConfig(**base, x0=op.adjoint(y)))
    ca, cb = cost_eval(a.x_hat, y, op, pen), cost_eval(b.x_hat, y, op, pen)
    assert abs(ca - cb) <= 1e-6 * abs(ca)


def test_permutation_equivariance():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(25)
    p = rng.permutation(25)
    cfg = FBConfig(mu=1.0)
    a = cps_solve(y, IdentityOp(25), CauchyPenalty(0.6), cfg).x_hat
    b = cps_solve(y[p], IdentityOp(25), CauchyPenalty(0.6), cfg).x_hat
    np.testing.assert_array_equal(a[p], b)


def test_deterministic():
    rng = np.random.default_rng(8)
    A = DenseOp(rng.standard_normal((10, 12)))
    y = rng.standard_normal(10)
    cfg = FBConfig(mu=0.05, record_history=True)
    a = cps_solve(y, A, CauchyPenalty(0.5), cfg)
    b = cps_solve(y, A, CauchyPenalty(0.5), cfg)
    assert np.array_equal(a.x_hat, b.x_hat) and a.costs == b.costs and a.rel_changes == b.rel_changes


def test_warnings_and_errors():
    op = IdentityOp(3)
    with pytest.warns(StepSizeWarning):
        fb_solve(np.ones(3), op, L1Penalty(0.1), FBConfig(mu=2.5))
    with pytest.warns(ConvexityWarning):
        cps_solve(np.ones(3), op, CauchyPenalty(0.1), FBConfig(mu=1.0))
    with pytest.raises(TypeError):
        cps_solve(np.ones(3), op, L1Penalty(0.1), FBConfig(mu=1.0))
    with pytest.raises(ValueError):
        fb_solve(np.ones(4), op, L1Penalty(0.1), FBConfig(mu=1.0))
    with pytest.raises(DivergenceError) as err:
        fb_solve(np.ones(3), op, Exploding(), FBConfig(mu=0.5, eps=1e-12))
    assert err.value.iteration == 3
