"""Saddle-point diagnostics: saddle value, gap against a certified reference,
fixed-point certification, heavy reference solves, and the two convergence-
theory checkers (Cesaro rate bound, monotone error norm).

The iteration's theory is stated for unit steps. The checkers evaluate it for
general (tau, sigma) through the substitution X = x, W = (tau/sqrt(sigma)) w
with operators sqrt(tau) K and sqrt(sigma) A, under which the implemented
iteration becomes the unit-step one. Consequences used below: the saddle
function and gap pick up a factor tau, the rate bound's distance term weights
the dual by tau^2/sigma, and the zero-constant regime of the rate bound needs
tau * ||K||^2 <= 1.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .prox import dual_feasible, dual_norms, prox_conjugate
from .solver import (Problem, SolverConfig, SolverTrace, _fp_components,
                     default_steps, pd_solve)


@dataclass(frozen=True)
class InfeasibleDual:
    """Signals a dual point outside its constraint set (saddle value -inf)."""
    worst_block: int
    excess: float


@dataclass(frozen=True)
class KKTReport:
    r1: float          # ||tau * (K^T(y - Kx) - A^T w)||
    r2: float          # ||w - prox_conjugate(w + (sigma/tau) A x)||
    tol: float
    passed: bool
    tau: float
    sigma: float


@dataclass(frozen=True)
class CertifiedReference:
    x: np.ndarray
    w: np.ndarray
    tau: float
    sigma: float
    report: KKTReport
    iterations: int


def saddle_value(problem: Problem, x, w):
    """0.5*||Kx - y||^2 + <Ax, w> for feasible w, else an InfeasibleDual signal."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    pen = problem.penalty
    norms = dual_norms(pen, w)
    slack = 1e-12 * (1.0 + pen.lam)
    worst = int(np.argmax(norms))
    if norms[worst] > pen.lam + slack:
        return InfeasibleDual(worst_block=worst, excess=float(norms[worst] - pen.lam))
    resid = problem.K.apply(x) - problem.y
    return 0.5 * float(np.dot(resid, resid)) + float(np.dot(problem.A.apply(x), w))


def kkt_check(problem: Problem, x, w, tau: float, sigma: float, tol: float) -> KKTReport:
    """Certify (x, w) as an approximate saddle point: both scaled fixed-point
    residuals must sit below tol."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    r1, r2 = _fp_components(problem, x, w, tau, sigma)
    return KKTReport(r1=r1, r2=r2, tol=tol, passed=(r1 <= tol and r2 <= tol),
                     tau=tau, sigma=sigma)


def reference_solution(problem: Problem, heavy_budget: int = 1_000_000,
                       fp_tol: float = 1e-12, cert_tol: float = 1e-10,
                       tau: Optional[float] = None,
                       sigma: Optional[float] = None) -> CertifiedReference:
    """Long solve followed by certification; only certified pairs are returned.

    Runs up to heavy_budget iterations, stopping early at fixed-point residual
    fp_tol, then requires both residuals below cert_tol. Certification failure
    is a hard error carrying the residuals.
    """
    if tau is None or sigma is None:
        d_tau, d_sigma = default_steps(problem)
        tau = d_tau if tau is None else tau
        sigma = d_sigma if sigma is None else sigma
    cfg = SolverConfig(tau=tau, sigma=sigma, max_iter=heavy_budget, fp_tol=fp_tol)
    res = pd_solve(problem, cfg)
    report = kkt_check(problem, res.x, res.w, tau, sigma, cert_tol)
    if not report.passed:
        raise RuntimeError(
            f"reference failed certification after {res.iterations} iterations: "
            f"r1={report.r1:.3e}, r2={report.r2:.3e}, tol={cert_tol:.1e}")
    return CertifiedReference(x=res.x, w=res.w, tau=tau, sigma=sigma,
                              report=report, iterations=res.iterations)


def _r1_vector(problem, x, w):
    return problem.K.adjoint_apply(problem.y - problem.K.apply(x)) \
        - problem.A.adjoint_apply(w)


def gap(problem: Problem, x, w, ref: CertifiedReference,
        cross_check: bool = True) -> float:
    """Merit value F(x, w_ref) - F(x_ref, w) relative to a certified reference.

    Nonnegative (up to certification error) for every primal x and feasible
    dual w. With cross_check the equivalent closed form
    0.5*||K(x_ref - x)||^2 + <w_ref - w, A x_ref> is evaluated too; the two
    agree up to roundoff plus ||r1_ref|| * ||x - x_ref||, the contribution of
    the reference's residual stationarity defect.
    """
    if not isinstance(ref, CertifiedReference):
        raise TypeError("gap requires a CertifiedReference from reference_solution/kkt_check")
    if not ref.report.passed:
        raise ValueError("reference is not certified")
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    f_xw = saddle_value(problem, x, ref.w)
    if isinstance(f_xw, InfeasibleDual):
        raise ValueError("certified reference has an infeasible dual")
    f_refw = saddle_value(problem, ref.x, w)
    if isinstance(f_refw, InfeasibleDual):
        raise ValueError(
            f"dual point is infeasible in block {f_refw.worst_block} "
            f"(excess {f_refw.excess:.3e}); the gap is undefined there")
    value = f_xw - f_refw
    if cross_check:
        kd = problem.K.apply(ref.x - x)
        closed = 0.5 * float(np.dot(kd, kd)) \
            + float(np.dot(ref.w - w, problem.A.apply(ref.x)))
        r1_ref = ref.report.r1 / ref.tau
        scale = max(1.0, abs(value), abs(closed))
        allowed = 1e-10 * scale + r1_ref * float(np.linalg.norm(x - ref.x))
        if abs(value - closed) > allowed:
            raise RuntimeError(
                f"gap definition {value:.12e} and closed form {closed:.12e} "
                f"disagree beyond {allowed:.3e}")
    return value


@dataclass(frozen=True)
class RateReport:
    passed: bool
    n_checked: int
    worst_upper_margin: float   # max over N of (G - RHS) / RHS, negative when safe
    worst_upper_n: int
    min_gap: float
    rhs_constant: float


def rate_bound_check(problem: Problem, trace: SolverTrace,
                     ref: CertifiedReference) -> RateReport:
    """Check the averaged-iterate gap bound G_N <= D0 / (2N) along a trace.

    In unit-step coordinates the bound on the gap of the running averages is
    (||X_ref - X_0||^2 + ||W_ref - W_0||^2) / (2N) once sqrt(tau)*K has norm
    at most 1. Mapped back to the implemented variables: the gap is
    tau * (F(xt, w_ref) - F(x_ref, wt)) and the distance constant is
    ||x_ref - x0||^2 + (tau^2/sigma) * ||w_ref - w0||^2. Upper slack is 1e-8
    relative plus 1e-12 absolute; the gap may not fall below -1e-10.
    """
    if not trace.has_snapshots:
        raise ValueError("rate check needs a trace recorded with snapshot_iterates")
    if not ref.report.passed:
        raise ValueError("reference is not certified")
    tau, sigma = trace.tau, trace.sigma
    bk = float(problem.K.norm_sq_bound())
    if tau * bk > 1.0 + 1e-12:
        raise ValueError(
            f"trace was run with tau*||K||^2 = {tau * bk:.4f} > 1; pre-scale the "
            "problem so the zero-constant regime of the bound applies")
    x0, w0 = trace.xs[0], trace.ws[0]
    d0 = float(np.dot(ref.x - x0, ref.x - x0)) \
        + (tau * tau / sigma) * float(np.dot(ref.w - w0, ref.w - w0))
    x_sum = np.zeros_like(x0)
    w_sum = np.zeros_like(w0)
    worst = -np.inf
    worst_n = 0
    min_gap = np.inf
    upper_ok = True
    n_total = len(trace.xs) - 1
    for n in range(1, n_total + 1):
        x_sum += trace.xs[n]
        w_sum += trace.ws[n]
        g = tau * gap(problem, x_sum / n, w_sum / n, ref, cross_check=False)
        rhs = d0 / (2.0 * n)
        if g > rhs * (1.0 + 1e-8) + 1e-12:
            upper_ok = False
        margin = (g - rhs) / rhs if rhs > 0 else (0.0 if g <= 0 else np.inf)
        if margin > worst:
            worst = margin
            worst_n = n
        min_gap = min(min_gap, g)
    passed = upper_ok and min_gap >= -1e-10
    return RateReport(passed=passed, n_checked=n_total, worst_upper_margin=float(worst),
                      worst_upper_n=worst_n, min_gap=float(min_gap), rhs_constant=d0)


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    n_steps: int
    m0: float
    max_increase: float
    allowed_increase: float


def _materialize_gram(A):
    """A A^T as a dense matrix, column by column; intended for desk-scale duals."""
    p = A.out_dim
    gram = np.empty((p, p))
    e = np.zeros(p)
    for j in range(p):
        e[j] = 1.0
        gram[:, j] = A.apply(A.adjoint_apply(e))
        e[j] = 0.0
    return gram


def monotonicity_check(problem: Problem, trace: SolverTrace,
                       ref: CertifiedReference) -> MonotonicityReport:
    """Check that the weighted error M_n never increases along the trace.

    M_n = ||x_n - x_ref||^2 + (tau^2/sigma) * ||B (w_n - w_ref)||^2 where B is
    the principal square root of I - sigma * A A^T (it exists because
    sigma*||A||^2 < 1). The tau^2/sigma weight is the unit-step error norm
    pulled back through the step-size substitution; see the module docstring.
    Increases up to 1e-10 * M_0 are tolerated as roundoff. The objective value
    along the same trace is allowed to increase and is not examined here.
    """
    if not trace.has_snapshots:
        raise ValueError("monotonicity check needs a trace recorded with snapshot_iterates")
    if not ref.report.passed:
        raise ValueError("reference is not certified")
    tau, sigma = trace.tau, trace.sigma
    gram = _materialize_gram(problem.A)
    s = np.eye(problem.A.out_dim) - sigma * gram
    evals, evecs = np.linalg.eigh(s)
    if evals.min() < -1e-10:
        raise ValueError(
            f"I - sigma*A*A^T has eigenvalue {evals.min():.3e} < 0; "
            "sigma violates its step condition")
    b = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    weight = tau * tau / sigma

    def m(x, w):
        bw = b @ (w - ref.w)
        return float(np.dot(x - ref.x, x - ref.x)) + weight * float(np.dot(bw, bw))

    m_prev = m(trace.xs[0], trace.ws[0])
    m0 = m_prev
    max_inc = 0.0
    for xn, wn in zip(trace.xs[1:], trace.ws[1:]):
        m_n = m(xn, wn)
        max_inc = max(max_inc, m_n - m_prev)
        m_prev = m_n
    allowed = 1e-10 * m0
    return MonotonicityReport(passed=(max_inc <= allowed), n_steps=len(trace.xs) - 1,
                              m0=m0, max_increase=float(max_inc),
                              allowed_increase=allowed)
