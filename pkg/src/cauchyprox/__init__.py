"""Cauchy proximal splitting: a closed-form Cauchy prox, a forward-backward
solver with a convergence-guaranteeing scale rule, baseline penalties, and
the denoising, restoration and MIMO experiments built on them."""

from .linops import (
    Conv2D,
    DenseOp,
    IdentityOp,
    LinearOperator,
    PartialIDFT,
    PowerIterationWarning,
    Psf2D,
    RealCompositeOp,
    dot_test,
    gaussian_psf,
    opnorm_sq,
)
from .penalties import (
    CauchyPenalty,
    HardPenalty,
    L1Penalty,
    TVPenalty,
    cauchy_derivatives,
    cauchy_neglog,
    gamma_min_frame,
    gamma_min_step,
    prox_cauchy,
    prox_cauchy_vec,
    prox_hard,
    prox_l1,
    prox_objective,
    prox_tv_1d,
    prox_tv_2d,
)
from .solver import (
    ConvexityWarning,
    DivergenceError,
    FBConfig,
    FBResult,
    StepSizeWarning,
    cost_eval,
    cps_solve,
    fb_solve,
    gamma_policy,
    hessian_check_frame,
    step_size_policy,
)

__version__ = "0.1.0"
