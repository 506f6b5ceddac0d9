"""Independent oracles used to pin expected values in the tests.

Everything here is written against the mathematical definitions with the
dumbest algorithm that is still exact (grid search, explicit loops, dense
eigen-solves, bisection), deliberately sharing no code with the package.
The oracles themselves are validated in test_oracles.py before any test
relies on them.
"""

import numpy as np


# --------------------------------------------------- two-point TV denoising
#
# minimize over (x1, x2):  0.5*(x1-y1)^2 + 0.5*(x2-y2)^2 + lam*|x2 - x1|

def tv2_objective(x1, x2, y1, y2, lam):
    return 0.5 * (x1 - y1) ** 2 + 0.5 * (x2 - y2) ** 2 + lam * abs(x2 - x1)


def tv2_grid(y1, y2, lam, span=None, passes=4, points=201):
    """Grid search for the 2-point TV minimizer, refined around the best cell."""
    if span is None:
        lo = min(y1, y2) - 1.0
        hi = max(y1, y2) + 1.0
    else:
        lo, hi = span
    c1 = c2 = 0.5 * (lo + hi)
    width = hi - lo
    for _ in range(passes):
        g1 = np.linspace(c1 - width / 2, c1 + width / 2, points)
        g2 = np.linspace(c2 - width / 2, c2 + width / 2, points)
        X1, X2 = np.meshgrid(g1, g2, indexing="ij")
        F = tv2_objective(X1, X2, y1, y2, lam)
        i, j = np.unravel_index(np.argmin(F), F.shape)
        c1, c2 = g1[i], g2[j]
        width = 4.0 * width / (points - 1)
    return c1, c2


def tv2_exact(y1, y2, lam):
    """Case analysis of the optimality conditions for the 2-point problem.

    With w the scalar dual variable (|w| <= lam), x1 = y1 + w and x2 = y2 - w,
    and w = clamp((y2 - y1) / 2, -lam, lam). Returns (x1, x2, w).
    """
    w = min(max((y2 - y1) / 2.0, -lam), lam)
    return y1 + w, y2 - w, w


# ----------------------------------------------------------- norm estimation

def sq_norm_dense(matrix):
    """Largest eigenvalue of M^T M by a dense svd, no power iteration."""
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    return float(s[0] ** 2) if s.size else 0.0


def grad1d_matrix(n):
    m = np.zeros((n - 1, n))
    for i in range(n - 1):
        m[i, i] = -1.0
        m[i, i + 1] = 1.0
    return m


def grad2d_matrix(rows, cols):
    """Forward differences, zero at the trailing boundary, blocks (dx, dy)."""
    n = rows * cols
    m = np.zeros((2 * n, n))
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                m[2 * k, k] = -1.0
                m[2 * k, r * cols + c + 1] = 1.0
            if r + 1 < rows:
                m[2 * k + 1, k] = -1.0
                m[2 * k + 1, (r + 1) * cols + c] = 1.0
    return m


# ------------------------------------------------------------- simple proxes

def soft_scalar(v, t):
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


def clamp_scalar(v, r):
    return min(max(v, -r), r)


def proj_l2_ball(v, r):
    v = np.asarray(v, dtype=float)
    norm = float(np.sqrt(np.sum(v * v)))
    if norm <= r:
        return v.copy()
    return v * (r / norm)


def proj_l1_ball_bisect(v, radius, iters=200):
    """Euclidean projection onto the l1 ball by bisection on the threshold.

    Independent of the sort-based method: solves sum(max(|v_i| - theta, 0))
    = radius for theta in [0, max|v|] when v lies outside the ball.
    """
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    lo, hi = 0.0, float(a.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(a - mid, 0.0).sum() > radius:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def prox_scalar_abs_grid(u, lam, passes=6, points=401):
    """argmin_z lam*|z| + 0.5*(z-u)^2 by refined grid search."""
    lo, hi = -abs(u) - 1.0, abs(u) + 1.0
    c = 0.0
    width = hi - lo
    for _ in range(passes):
        g = np.linspace(c - width / 2, c + width / 2, points)
        f = lam * np.abs(g) + 0.5 * (g - u) ** 2
        c = g[int(np.argmin(f))]
        width = 4.0 * width / (points - 1)
    return float(c)


# ---------------------------------------------------- full-problem reference

def cvx_solve(K, y, lam, A, block_sizes, kind="block-euclidean"):
    """Solve 0.5*||Kx-y||^2 + lam * sum of block norms of Ax with cvxpy.

    K, A are dense arrays. Returns the optimal x. Accuracy is whatever the
    conic solver delivers, roughly 1e-8; compare at 1e-6.
    """
    import cvxpy as cp

    K = np.asarray(K, dtype=float)
    A = np.asarray(A, dtype=float)
    x = cp.Variable(K.shape[1])
    z = A @ x
    terms = []
    off = 0
    for s in block_sizes:
        blk = z[off:off + s]
        if kind == "block-euclidean":
            terms.append(cp.norm(blk, 2))
        elif kind == "block-l1":
            terms.append(cp.norm(blk, 1))
        elif kind == "block-linf":
            terms.append(cp.norm(blk, "inf"))
        else:
            raise ValueError(kind)
        off += s
    obj = 0.5 * cp.sum_squares(K @ x - y) + lam * cp.sum(cp.hstack(terms))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL)
    if prob.status != cp.OPTIMAL:
        raise RuntimeError(f"cvx solve ended with status {prob.status}")
    return np.asarray(x.value, dtype=float).ravel()


def constant_image_ls(K, y, n):
    """min over constant vectors c*1 of 0.5*||K(c*1) - y||^2, returns c*1."""
    K = np.asarray(K, dtype=float)
    k1 = K @ np.ones(n)
    denom = float(k1 @ k1)
    c = float(k1 @ y) / denom if denom > 0 else 0.0
    return c * np.ones(n)
