"""Explicit primal-dual iteration for min_x 0.5*||Kx - y||^2 + H(Ax).

Each iteration performs a primal predictor step, a projected dual ascent step,
and a primal corrector step:

    xbar    = x + tau*K^T(y - Kx) - tau*A^T w
    w_next  = prox_conjugate(w + (sigma/tau) * A xbar)
    x_next  = x + tau*K^T(y - Kx) - tau*A^T w_next

valid for tau < 2/||K||^2 and sigma < 1/||A||^2. The solve loop arranges the
computation so K, K^T, A and A^T are each applied exactly once per iteration.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linops import LinearOp
from .prox import Penalty, penalty_value, prox_conjugate


class DivergenceError(RuntimeError):
    """Iterate norm blew past the divergence threshold (bad step sizes or norm bound)."""


class NonFiniteError(RuntimeError):
    """An update produced nan or inf."""


@dataclass(frozen=True)
class Problem:
    K: LinearOp
    A: LinearOp
    y: np.ndarray
    penalty: Penalty

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).ravel())
        if self.K.in_dim != self.A.in_dim:
            raise ValueError(
                f"K acts on R^{self.K.in_dim} but A acts on R^{self.A.in_dim}")
        if self.y.shape[0] != self.K.out_dim:
            raise ValueError(
                f"data length {self.y.shape[0]} does not match K output {self.K.out_dim}")
        if self.penalty.layout != self.A.layout:
            raise ValueError("penalty block layout does not match A")


@dataclass
class SolverConfig:
    tau: float
    sigma: float
    max_iter: int = 1000
    fp_tol: float = 0.0
    record_trace: bool = False
    snapshot_iterates: bool = False
    x0: Optional[np.ndarray] = None
    w0: Optional[np.ndarray] = None
    enforce_step_conditions: bool = True
    check_form_identity: bool = False

    def __post_init__(self):
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.fp_tol < 0:
            raise ValueError(f"fp_tol must be nonnegative, got {self.fp_tol}")

    def validate_for(self, problem: Problem):
        """Check the step-size conditions against the problem's norm bounds.

        enforce_step_conditions=False skips only these two comparisons; it
        exists for matched-step equivalence runs that sit exactly on the
        boundary of the valid region.
        """
        if not self.enforce_step_conditions:
            return
        bk = float(problem.K.norm_sq_bound())
        ba = float(problem.A.norm_sq_bound())
        if bk > 0 and not self.tau < 2.0 / bk:
            raise ValueError(f"tau={self.tau} violates tau < 2/||K||^2 = {2.0 / bk}")
        if ba > 0 and not self.sigma < 1.0 / ba:
            raise ValueError(f"sigma={self.sigma} violates sigma < 1/||A||^2 = {1.0 / ba}")


@dataclass
class SolverTrace:
    """Per-iteration records; row i describes the state after iteration i+1."""
    tau: float
    sigma: float
    n: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    fp_residual: list = field(default_factory=list)
    dx_norm: list = field(default_factory=list)
    dw_norm: list = field(default_factory=list)
    xs: Optional[list] = None  # snapshots; index 0 is the start state
    ws: Optional[list] = None

    @property
    def has_snapshots(self):
        return self.xs is not None

    def rows(self):
        return zip(self.n, self.objective, self.fp_residual, self.dx_norm, self.dw_norm)


@dataclass
class SolverResult:
    x: np.ndarray
    w: Optional[np.ndarray]
    x_avg: Optional[np.ndarray]
    w_avg: Optional[np.ndarray]
    iterations: int
    final_fp_residual: float
    trace: Optional[SolverTrace] = None


def default_steps(problem: Problem, margin: float = 0.495):
    """Step sizes tau = margin*2/||K||^2 and sigma = margin/||A||^2.

    The default margin reproduces the customary 0.99/||K||^2 choice. A zero
    operator in one slot borrows the other slot's value; both zero is a
    degenerate problem and a hard error.
    """
    if not 0 < margin < 1:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    bk = float(problem.K.norm_sq_bound())
    ba = float(problem.A.norm_sq_bound())
    if bk == 0.0 and ba == 0.0:
        raise ValueError("both operators are zero; nothing to solve")
    tau = margin * 2.0 / bk if bk > 0 else None
    sigma = margin / ba if ba > 0 else None
    if tau is None:
        tau = sigma
    if sigma is None:
        sigma = tau
    return tau, sigma


def _require_finite(v, what, iteration=None):
    if not np.all(np.isfinite(v)):
        where = f" at iteration {iteration}" if iteration is not None else ""
        raise NonFiniteError(f"non-finite values in the {what}{where}")


def pd_step(x, w, problem: Problem, tau: float, sigma: float, aw=None):
    """One iteration; returns (x_next, w_next, xbar).

    aw may carry a precomputed A^T w (the solve loop passes the previous
    corrector's value so each operator is applied once per iteration).
    """
    K, A, pen = problem.K, problem.A, problem.penalty
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    r = K.adjoint_apply(problem.y - K.apply(x))
    if aw is None:
        aw = A.adjoint_apply(w)
    drift = x + tau * r
    xbar = drift - tau * aw
    w_next = prox_conjugate(pen, w + (sigma / tau) * A.apply(xbar), sigma / tau)
    _require_finite(w_next, "dual update")
    x_next = drift - tau * A.adjoint_apply(w_next)
    _require_finite(x_next, "primal update")
    return x_next, w_next, xbar


def objective(problem: Problem, x) -> float:
    """0.5*||Kx - y||^2 + penalty on Ax."""
    x = np.asarray(x, dtype=float)
    resid = problem.K.apply(x) - problem.y
    return 0.5 * float(np.dot(resid, resid)) + penalty_value(problem.penalty, problem.A.apply(x))


def _fp_components(problem, x, w, tau, sigma, r=None, ax=None, aw=None):
    """The two fixed-point residual norms; zero exactly at a saddle point."""
    K, A, pen = problem.K, problem.A, problem.penalty
    if r is None:
        r = K.adjoint_apply(problem.y - K.apply(x))
    if aw is None:
        aw = A.adjoint_apply(w)
    if ax is None:
        ax = A.apply(x)
    r1 = float(np.linalg.norm(tau * (r - aw)))
    r2 = float(np.linalg.norm(w - prox_conjugate(pen, w + (sigma / tau) * ax, sigma / tau)))
    return r1, r2


def fixed_point_residual(problem: Problem, x, w, tau: float, sigma: float) -> float:
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    r1, r2 = _fp_components(problem, x, w, tau, sigma)
    return r1 + r2


def pd_solve(problem: Problem, config: SolverConfig) -> SolverResult:
    """Iterate pd_step until the fixed-point residual reaches fp_tol or max_iter.

    Starts from zero vectors unless config provides x0/w0. Maintains running
    Cesaro means of iterates 1..N. When fp_tol > 0 or a trace is recorded, the
    residual and objective of each new iterate are evaluated in the loop at the
    cost of one extra application of A per iteration.
    """
    config.validate_for(problem)
    K, A, pen = problem.K, problem.A, problem.penalty
    tau, sigma = config.tau, config.sigma

    x = np.zeros(K.in_dim) if config.x0 is None else np.asarray(config.x0, dtype=float).copy()
    w = np.zeros(A.out_dim) if config.w0 is None else np.asarray(config.w0, dtype=float).copy()
    if x.shape[0] != K.in_dim:
        raise ValueError(f"x0 has length {x.shape[0]}, expected {K.in_dim}")
    if w.shape[0] != A.out_dim:
        raise ValueError(f"w0 has length {w.shape[0]}, expected {A.out_dim}")

    diverge_limit = 1e12 * (1.0 + np.linalg.norm(x) + np.linalg.norm(problem.y))
    evaluate = config.fp_tol > 0 or config.record_trace

    trace = None
    if config.record_trace or config.snapshot_iterates:
        trace = SolverTrace(tau=tau, sigma=sigma)
        if config.snapshot_iterates:
            trace.xs = [x.copy()]
            trace.ws = [w.copy()]

    x_avg = np.zeros_like(x)
    w_avg = np.zeros_like(w)
    aw = A.adjoint_apply(w)
    r = K.adjoint_apply(problem.y - K.apply(x))
    fp = None
    iterations = 0

    for n in range(1, config.max_iter + 1):
        drift = x + tau * r
        xbar = drift - tau * aw
        w_next = prox_conjugate(pen, w + (sigma / tau) * A.apply(xbar), sigma / tau)
        _require_finite(w_next, "dual update", n)
        aw = A.adjoint_apply(w_next)
        x_next = drift - tau * aw
        _require_finite(x_next, "primal update", n)

        if config.check_form_identity:
            lhs = xbar
            rhs = x_next - tau * A.adjoint_apply(w - w_next)
            scale = 1.0 + np.linalg.norm(lhs)
            if np.linalg.norm(lhs - rhs) > 1e-12 * scale:
                raise AssertionError(f"predictor identity violated at iteration {n}")

        dx = float(np.linalg.norm(x_next - x))
        dw = float(np.linalg.norm(w_next - w))
        x, w = x_next, w_next
        iterations = n
        x_avg += (x - x_avg) / n
        w_avg += (w - w_avg) / n

        if np.linalg.norm(x) > diverge_limit:
            raise DivergenceError(
                f"iterate norm exceeded {diverge_limit:.3e} at iteration {n}; "
                "step sizes or operator norm bounds are invalid")

        q = problem.y - K.apply(x)
        r = K.adjoint_apply(q)

        if evaluate:
            ax = A.apply(x)
            r1, r2 = _fp_components(problem, x, w, tau, sigma, r=r, ax=ax, aw=aw)
            fp = r1 + r2
            if config.record_trace:
                trace.n.append(n)
                trace.objective.append(0.5 * float(np.dot(q, q)) + penalty_value(pen, ax))
                trace.fp_residual.append(fp)
                trace.dx_norm.append(dx)
                trace.dw_norm.append(dw)
        if config.snapshot_iterates:
            trace.xs.append(x.copy())
            trace.ws.append(w.copy())
        if config.fp_tol > 0 and fp is not None and fp <= config.fp_tol:
            break

    if fp is None:
        fp = fixed_point_residual(problem, x, w, tau, sigma)
    return SolverResult(x=x, w=w, x_avg=x_avg, w_avg=w_avg,
                        iterations=iterations, final_fp_residual=fp, trace=trace)
