"""Non-separable penalty solver: an explicit primal-dual method for problems
of the form

    minimize over x   0.5 * ||K x - y||^2 + lambda * sum of block norms of A x

with penalties built from block euclidean, componentwise, and per-block
max norms. The package bundles the solver, exact proximal maps, baseline
algorithms it reduces to in special cases, problem generators, and checks
for the method's convergence guarantees (duality-gap rate, monotone error
norm, KKT residuals).

Importing the package is deliberately lightweight: submodules (and numpy)
load on first attribute access so the command line can pin the numeric
thread count beforehand.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # linear operators
    "BlockLayout": "linops",
    "NormEstimate": "linops",
    "LinearOp": "linops",
    "IdentityOp": "linops",
    "DenseOp": "linops",
    "SparseOp": "linops",
    "Gradient1D": "linops",
    "Gradient2D": "linops",
    "GroupSelector": "linops",
    "ScaledOp": "linops",
    "make_identity": "linops",
    "make_dense": "linops",
    "make_sparse": "linops",
    "make_gradient": "linops",
    "make_group_selector": "linops",
    "make_scaled": "linops",
    "apply": "linops",
    "adjoint_apply": "linops",
    "norm_sq_estimate": "linops",
    # penalties and proximal maps
    "Penalty": "prox",
    "NORM_KINDS": "prox",
    "penalty_value": "prox",
    "dual_norms": "prox",
    "dual_feasible": "prox",
    "prox_conjugate": "prox",
    "prox_primal": "prox",
    "soft_threshold": "prox",
    "project_linf_ball": "prox",
    "project_l1_ball": "prox",
    # solver
    "Problem": "solver",
    "SolverConfig": "solver",
    "SolverTrace": "solver",
    "SolverResult": "solver",
    "DivergenceError": "solver",
    "NonFiniteError": "solver",
    "default_steps": "solver",
    "pd_step": "solver",
    "pd_solve": "solver",
    "objective": "solver",
    "fixed_point_residual": "solver",
    # baseline algorithms
    "ista_solve": "reference",
    "gradient_projection_solve": "reference",
    "ista_solve_problem": "reference",
    "gradient_projection_solve_problem": "reference",
    # problem constructors
    "make_tv_denoise": "problems",
    "make_tv_tomography": "problems",
    "TomographySetup": "problems",
    "make_group_sparsity": "problems",
    "calibrate_lambda": "problems",
    "CalibrationResult": "problems",
    "phantom": "problems",
    # diagnostics
    "saddle_value": "diagnostics",
    "gap": "diagnostics",
    "kkt_check": "diagnostics",
    "KKTReport": "diagnostics",
    "reference_solution": "diagnostics",
    "CertifiedReference": "diagnostics",
    "rate_bound_check": "diagnostics",
    "RateReport": "diagnostics",
    "monotonicity_check": "diagnostics",
    "MonotonicityReport": "diagnostics",
    "InfeasibleDual": "diagnostics",
    # file formats
    "FormatError": "io",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    module = importlib.import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
