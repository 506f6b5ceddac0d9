"""Problem constructors: TV denoising, synthetic straight-ray tomography with
exact chord-length rows, overlapping group sparsity, and residual-matching
penalty calibration.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linops import (BlockLayout, GroupSelector, LinearOp, SparseOp,
                     make_gradient, make_identity)
from .prox import Penalty
from .solver import Problem, SolverConfig, default_steps, pd_solve


def make_tv_denoise(g, lam: float, shape=None) -> Problem:
    """K = identity, A = gradient, data g (flat vector or 2d image)."""
    g = np.asarray(g, dtype=float)
    if shape is None:
        shape = g.shape if g.ndim == 2 else (g.size,)
    else:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        if int(np.prod(shape)) != g.size:
            raise ValueError(f"shape {shape} does not match signal of size {g.size}")
    g = g.ravel()
    A = make_gradient(shape if len(shape) == 2 else shape[0])
    K = make_identity(g.size)
    return Problem(K=K, A=A, y=g, penalty=Penalty(lam, "block-euclidean", A.layout))


def phantom(rows: int, cols: int) -> np.ndarray:
    """Piecewise-constant test image: three overlapping rectangles on zero."""
    if rows < 4 or cols < 4:
        raise ValueError("phantom needs at least a 4x4 grid")
    img = np.zeros((rows, cols))
    img[rows // 8: rows // 2, cols // 8: cols // 2] = 1.0
    img[rows // 3: (3 * rows) // 4, cols // 2: (7 * cols) // 8] = 0.6
    img[rows // 2: (5 * rows) // 8, cols // 4: (5 * cols) // 8] += 0.8
    return img


def _boundary_point(u, rows, cols):
    """Map u in [0,1) to a point on the rectangle boundary; returns (point, edge id)."""
    per = 2.0 * (rows + cols)
    s = u * per
    if s < cols:
        return np.array([s, 0.0]), 0
    s -= cols
    if s < rows:
        return np.array([float(cols), s]), 1
    s -= rows
    if s < cols:
        return np.array([cols - s, float(rows)]), 2
    s -= cols
    return np.array([0.0, rows - s]), 3


def _chord_cells(p0, p1, rows, cols):
    """Exact intersection lengths of segment p0->p1 with the unit grid cells.

    Coordinates: x in [0, cols] along columns, y in [0, rows] along rows;
    cell (r, c) occupies [c, c+1] x [r, r+1]. Returns ({(r, c): length}, total).
    """
    d = p1 - p0
    length = float(np.hypot(d[0], d[1]))
    if length <= 0.0:
        return {}, 0.0
    ts = [0.0, 1.0]
    if d[0] != 0.0:
        for gx in range(cols + 1):
            t = (gx - p0[0]) / d[0]
            if 0.0 < t < 1.0:
                ts.append(t)
    if d[1] != 0.0:
        for gy in range(rows + 1):
            t = (gy - p0[1]) / d[1]
            if 0.0 < t < 1.0:
                ts.append(t)
    ts = np.unique(ts)
    out = {}
    total = 0.0
    for a, b in zip(ts[:-1], ts[1:]):
        mid = p0 + (0.5 * (a + b)) * d
        c = int(np.floor(mid[0]))
        r = int(np.floor(mid[1]))
        if 0 <= r < rows and 0 <= c < cols:
            seg = (b - a) * length
            out[(r, c)] = out.get((r, c), 0.0) + seg
            total += seg
    return out, total


def _sample_chord(rng, rows, cols):
    (a, ea) = _boundary_point(rng.random(), rows, cols)
    (b, eb) = _boundary_point(rng.random(), rows, cols)
    return a, ea, b, eb


@dataclass
class TomographySetup:
    """A tomography instance before the penalty weight is chosen."""
    K: LinearOp
    A: LinearOp
    y: np.ndarray
    noise_norm: float
    x_in: np.ndarray
    ray_lengths: np.ndarray
    seed: int

    def problem(self, lam: float) -> Problem:
        return Problem(K=self.K, A=self.A, y=self.y,
                       penalty=Penalty(lam, "block-euclidean", self.A.layout))


def make_tv_tomography(image_shape, x_in, n_rays: int, noise_frac: float, seed: int):
    """Seeded straight-ray tomography data for a gradient-penalized image.

    Each row of K holds the intersection lengths of one random chord (endpoints
    uniform on the image boundary) with the grid cells, so the row sum equals
    the chord's length inside the image. Chords with no interior intersection
    (including both endpoints on one edge) are resampled up to a retry cap.
    Data are y = K x_in + e with e gaussian rescaled so that
    ||e|| = noise_frac * ||K x_in|| exactly.

    Returns (TomographySetup, y, noise_norm); build a Problem with
    setup.problem(lam).
    """
    rows, cols = (int(s) for s in image_shape)
    x_in = np.asarray(x_in, dtype=float).ravel()
    if x_in.size != rows * cols:
        raise ValueError(f"ground truth has {x_in.size} pixels, expected {rows * cols}")
    if n_rays < 1:
        raise ValueError("need at least one ray")
    if not 0 <= noise_frac < 1:
        raise ValueError("noise_frac must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    triplets = []
    lengths = []
    retries_left = 100 + 10 * n_rays
    row = 0
    while row < n_rays:
        a, ea, b, eb = _sample_chord(rng, rows, cols)
        degenerate = ea == eb  # chord runs along the boundary, no interior mass
        cells, total = ({}, 0.0) if degenerate else _chord_cells(a, b, rows, cols)
        if degenerate or total <= 1e-12:
            retries_left -= 1
            if retries_left < 0:
                raise RuntimeError("exceeded the retry cap while sampling rays")
            continue
        for (r, c), seg in sorted(cells.items()):
            triplets.append((row, r * cols + c, seg))
        lengths.append(total)
        row += 1
    K = SparseOp(n_rays, rows * cols, triplets)
    A = make_gradient((rows, cols))
    kx = K.apply(x_in)
    if noise_frac == 0.0:
        e = np.zeros(n_rays)
    else:
        e = rng.standard_normal(n_rays)
        e *= noise_frac * np.linalg.norm(kx) / np.linalg.norm(e)
    y = kx + e
    noise_norm = float(np.linalg.norm(e))
    setup = TomographySetup(K=K, A=A, y=y, noise_norm=noise_norm, x_in=x_in,
                            ray_lengths=np.asarray(lengths), seed=seed)
    return setup, y, noise_norm


def make_group_sparsity(K: LinearOp, y, groups, lam: float) -> Problem:
    """Penalty on coordinate groups (overlap allowed), one block per group."""
    A = GroupSelector(groups, K.in_dim)
    return Problem(K=K, A=A, y=y, penalty=Penalty(lam, "block-euclidean", A.layout))


@dataclass
class CalibrationResult:
    lam: float
    x: np.ndarray
    residual: float
    probes: list  # (lam, residual) pairs in evaluation order


def _probe_residual(template, lam, y, solve_budget, fp_tol):
    problem = template(lam)
    tau, sigma = default_steps(problem)
    cfg = SolverConfig(tau=tau, sigma=sigma, max_iter=solve_budget, fp_tol=fp_tol)
    res = pd_solve(problem, cfg)
    return float(np.linalg.norm(problem.K.apply(res.x) - y)), res.x


def calibrate_lambda(template, y, target_residual: float, tol_rel: float = 1e-2,
                     solve_budget: int = 2000) -> CalibrationResult:
    """Find lam such that the solved data residual matches target_residual.

    template is either a TomographySetup or any callable lam -> Problem. The
    residual ||Kx(lam) - y|| is nondecreasing in lam, so the search expands a
    decade bracket around lam = 1 and then bisects on log(lam) until the probe
    residual is within tol_rel (relative) of the target. Every probe is a cold
    solver start with the given iteration budget. Monotonicity of the residual
    across all probes is asserted; a violation beyond solver accuracy aborts.
    """
    y = np.asarray(y, dtype=float).ravel()
    if hasattr(template, "problem"):
        template = template.problem
    if not target_residual > 0:
        raise ValueError("target_residual must be positive")
    if not 0 < tol_rel < 1:
        raise ValueError("tol_rel must lie in (0, 1)")
    fp_tol = 1e-9
    probes = []

    def probe(lam):
        r, x = _probe_residual(template, lam, y, solve_budget, fp_tol)
        probes.append((lam, r))
        return r, x

    lo, hi = 1.0, 1.0
    r_lo, x_lo = probe(lo)
    r_hi, x_hi = r_lo, x_lo
    expansions = 0
    while r_lo > target_residual:
        lo /= 10.0
        r_lo, x_lo = probe(lo)
        expansions += 1
        if expansions > 40:
            raise ValueError(
                f"target residual {target_residual:.6g} below the achievable floor "
                f"(residual {r_lo:.6g} at lam={lo:.3e})")
    expansions = 0
    while r_hi < target_residual:
        hi *= 10.0
        r_hi, x_hi = probe(hi)
        expansions += 1
        if expansions > 40:
            raise ValueError(
                f"target residual {target_residual:.6g} above the achievable ceiling "
                f"(residual {r_hi:.6g} at lam={hi:.3e})")

    best = (abs(r_lo - target_residual), lo, r_lo, x_lo)
    if abs(r_hi - target_residual) < best[0]:
        best = (abs(r_hi - target_residual), hi, r_hi, x_hi)
    for _ in range(200):
        if best[0] <= tol_rel * target_residual:
            break
        mid = float(np.sqrt(lo * hi))
        if mid == lo or mid == hi:  # bracket exhausted at float resolution
            break
        r_mid, x_mid = probe(mid)
        if abs(r_mid - target_residual) < best[0]:
            best = (abs(r_mid - target_residual), mid, r_mid, x_mid)
        if r_mid < target_residual:
            lo = mid
        else:
            hi = mid

    slack = 1e-6 * max(target_residual, 1.0)
    ordered = sorted(probes)
    for (l1, r1), (l2, r2) in zip(ordered[:-1], ordered[1:]):
        if r2 < r1 - slack:
            raise RuntimeError(
                "residual is not monotone in lam across probes "
                f"(r({l1:.4e})={r1:.6e} vs r({l2:.4e})={r2:.6e}); "
                f"all probes: {ordered}")

    err, lam, resid, x = best
    if err > tol_rel * target_residual:
        raise ValueError(
            f"could not match residual {target_residual:.6g} within {tol_rel:.1e} "
            f"relative; best {resid:.6g} at lam={lam:.6g}")
    return CalibrationResult(lam=lam, x=x, residual=resid, probes=probes)
