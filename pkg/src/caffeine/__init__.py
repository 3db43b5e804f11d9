"""caffeine: compound random-feature regression and certificate control.

Learning the control-affine residual of a mechanical system calls for
regressors that are themselves affine in the input.  This package builds
two such families from random Fourier features of the state -- a
product-of-blocks layout and an additive shared layout -- together with
their exact kernels, ridge/Bayesian regression with affine-in-input
posterior decompositions, certificate-function controllers (a closed-form
slack QP and a min-norm conic program with robustness corrections), and a
simulated double pendulum with a compiled integrator core (pure-Python
fallback selected automatically at import).
"""

from .certify import CLFSpec, clf_grad, clf_value, default_clf_spec
from .control import (InfeasibleError, QPProblem, RobustBoundParams,
                      SOCPProblem, ce_controller, robust_terms, solve_ccf_qp,
                      solve_ccf_socp)
from .dynamics import (NOMINAL_PARAMS, TRUE_PARAMS, PendulumParams, simulate,
                       simulation_backend)
from .features import (AD, ADP, CompoundBasis, StateBasis,
                       build_compound_basis, eval_compound_basis,
                       sample_state_basis)
from .kernels import KernelSpec, VANILLA, gram, measure_approx_error
from .regression import (AffinePosterior, GPModel, NumericalHealthError,
                         RidgeModel, affine_decompose, fit_gp, fit_ridge,
                         gp_posterior, load_model, predict, save_model)

__version__ = "1.0.0"

__all__ = [
    "AD", "ADP", "VANILLA",
    "AffinePosterior", "CLFSpec", "CompoundBasis", "GPModel",
    "InfeasibleError", "KernelSpec", "NOMINAL_PARAMS", "NumericalHealthError",
    "PendulumParams", "QPProblem", "RidgeModel", "RobustBoundParams",
    "SOCPProblem", "StateBasis", "TRUE_PARAMS",
    "affine_decompose", "build_compound_basis", "ce_controller", "clf_grad",
    "clf_value", "default_clf_spec", "eval_compound_basis", "fit_gp",
    "fit_ridge", "gp_posterior", "gram", "load_model", "measure_approx_error",
    "predict", "robust_terms", "sample_state_basis", "save_model", "simulate",
    "simulation_backend", "solve_ccf_qp", "solve_ccf_socp",
]
