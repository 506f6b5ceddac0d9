"""Special-case baseline algorithms: iterative soft-thresholding for the
penalty-on-x case, and dual gradient projection for the quadratic-data case.

Both exist as per-iterate equivalence oracles and benchmark baselines. The
problem-level wrappers reject anything outside their special case instead of
approximating.
"""

from typing import Optional

import numpy as np

from .linops import IdentityOp, LinearOp
from .prox import Penalty, prox_conjugate
from .solver import (DivergenceError, NonFiniteError, Problem, SolverResult,
                     SolverTrace)


def _soft(v, t):
    # componentwise shrink by t, written as the exact complement of a clip
    return v - np.clip(v, -t, t)


def ista_solve(K: LinearOp, y, lam: float, tau: float, max_iter: int,
               x0=None, snapshot_iterates: bool = False) -> SolverResult:
    """Iterate x <- shrink(x + tau*K^T(y - Kx), tau*lam).

    Solves min_x 0.5*||Kx - y||^2 + lam*||x||_1 for tau*||K||^2 < 2. The dual
    fields of the result are None; Cesaro averages cover iterates 1..N.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != K.out_dim:
        raise ValueError(f"data length {y.shape[0]} does not match K output {K.out_dim}")
    if not lam >= 0:
        raise ValueError("lam must be nonnegative")
    bound = float(K.norm_sq_bound())
    if not tau * bound < 2.0:
        raise ValueError(f"tau={tau} violates tau*||K||^2 < 2 (bound {bound})")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    x = np.zeros(K.in_dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    limit = 1e12 * (1.0 + np.linalg.norm(x) + np.linalg.norm(y))
    t = tau * lam
    trace = None
    if snapshot_iterates:
        trace = SolverTrace(tau=tau, sigma=float("nan"))
        trace.xs = [x.copy()]
        trace.ws = []
    x_avg = np.zeros_like(x)
    for n in range(1, max_iter + 1):
        v = x + tau * K.adjoint_apply(y - K.apply(x))
        x = _soft(v, t) if t > 0 else v
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"non-finite iterate at iteration {n}")
        if np.linalg.norm(x) > limit:
            raise DivergenceError(f"iterate norm exceeded {limit:.3e} at iteration {n}")
        x_avg += (x - x_avg) / n
        if snapshot_iterates:
            trace.xs.append(x.copy())
    v = x + tau * K.adjoint_apply(y - K.apply(x))
    fp = float(np.linalg.norm(x - (_soft(v, t) if t > 0 else v)))
    return SolverResult(x=x, w=None, x_avg=x_avg, w_avg=None,
                        iterations=max_iter, final_fp_residual=fp, trace=trace)


def gradient_projection_solve(A: LinearOp, g, lam: float, sigma: float, max_iter: int,
                              w0=None, snapshot_iterates: bool = False) -> SolverResult:
    """Dual iteration w <- project(w + sigma*A(g - A^T w)) for
    min_x 0.5*||x - g||^2 + lam*||Ax||_1; returns x = g - A^T w.

    Valid for sigma*||A||^2 < 1. The projection clips each block of w to the
    dual ball of radius lam (Euclidean within-block norm).
    """
    g = np.asarray(g, dtype=float).ravel()
    if g.shape[0] != A.in_dim:
        raise ValueError(f"signal length {g.shape[0]} does not match A input {A.in_dim}")
    if not lam > 0:
        raise ValueError("lam must be positive")
    bound = float(A.norm_sq_bound())
    if not sigma * bound < 1.0:
        raise ValueError(f"sigma={sigma} violates sigma*||A||^2 < 1 (bound {bound})")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    pen = Penalty(lam, "block-euclidean", A.layout)
    w = np.zeros(A.out_dim) if w0 is None else np.asarray(w0, dtype=float).copy()
    limit = 1e12 * (1.0 + np.linalg.norm(w) + np.linalg.norm(g))
    trace = None
    if snapshot_iterates:
        trace = SolverTrace(tau=float("nan"), sigma=sigma)
        trace.xs = []
        trace.ws = [w.copy()]
    w_avg = np.zeros_like(w)
    for n in range(1, max_iter + 1):
        w = prox_conjugate(pen, w + sigma * A.apply(g - A.adjoint_apply(w)), sigma)
        if not np.all(np.isfinite(w)):
            raise NonFiniteError(f"non-finite dual iterate at iteration {n}")
        if np.linalg.norm(w) > limit:
            raise DivergenceError(f"dual iterate norm exceeded {limit:.3e} at iteration {n}")
        w_avg += (w - w_avg) / n
        if snapshot_iterates:
            trace.ws.append(w.copy())
    x = g - A.adjoint_apply(w)
    fp = float(np.linalg.norm(
        w - prox_conjugate(pen, w + sigma * A.apply(g - A.adjoint_apply(w)), sigma)))
    return SolverResult(x=x, w=w, x_avg=None, w_avg=w_avg,
                        iterations=max_iter, final_fp_residual=fp, trace=trace)


def ista_solve_problem(problem: Problem, tau: float, max_iter: int, **kw) -> SolverResult:
    """ISTA on a Problem; rejects anything but A = identity with scalar blocks."""
    if not isinstance(problem.A, IdentityOp):
        raise ValueError("baseline requires A = identity (penalty directly on x); "
                         f"got A of kind {problem.A.kind!r}")
    if problem.penalty.norm_kind not in ("block-euclidean", "block-l1"):
        raise ValueError("baseline requires a componentwise l1 penalty")
    if not problem.A.layout.uniform or problem.A.block_dim != 1:
        raise ValueError("baseline requires scalar penalty blocks")
    return ista_solve(problem.K, problem.y, problem.penalty.lam, tau, max_iter, **kw)


def gradient_projection_solve_problem(problem: Problem, sigma: float, max_iter: int,
                                      **kw) -> SolverResult:
    """Dual gradient projection on a Problem; rejects anything but K = identity."""
    if not isinstance(problem.K, IdentityOp):
        raise ValueError("baseline requires K = identity (pure denoising); "
                         f"got K of kind {problem.K.kind!r}")
    if problem.penalty.norm_kind != "block-euclidean":
        raise ValueError("baseline requires the block-euclidean penalty")
    return gradient_projection_solve(problem.A, problem.y, problem.penalty.lam,
                                     sigma, max_iter, **kw)
