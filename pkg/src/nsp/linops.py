"""Linear operators with adjoints, block structure, and certified norm bounds.

Every operator maps flat real vectors to flat real vectors. The output of an
operator is organized in blocks (sizes summing to out_dim); penalties act on
those blocks. Operators are immutable after construction and all applications
are deterministic.
"""

import numpy as np
import scipy.sparse as sp

_POWER_SEED = 0x5EED
_NORM_INFLATION = 1.01


def _as_vector(v, n, what):
    a = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.shape[0] != n:
        raise ValueError(f"{what}: expected a vector of length {n}, got shape {a.shape}")
    return a


class BlockLayout:
    """Partition of a length-n vector into contiguous blocks."""

    def __init__(self, sizes):
        arr = np.asarray(sizes, dtype=np.intp)
        if arr.ndim != 1 or arr.size == 0 or np.any(arr < 1):
            raise ValueError("block sizes must be a nonempty sequence of positive integers")
        self.sizes = tuple(int(s) for s in arr)
        self.offsets = tuple(int(o) for o in np.concatenate(([0], np.cumsum(arr)[:-1])))
        self.total = int(arr.sum())
        self.n_blocks = arr.size
        self.uniform = bool(np.all(arr == arr[0]))

    @classmethod
    def uniform_blocks(cls, n_blocks, block_dim):
        return cls(np.full(n_blocks, block_dim, dtype=np.intp))

    def __eq__(self, other):
        return isinstance(other, BlockLayout) and self.sizes == other.sizes

    def check(self, u, what="vector"):
        if u.shape[0] != self.total:
            raise ValueError(f"{what}: expected length {self.total}, got {u.shape[0]}")

    def block_norms(self, u, kind):
        """Per-block norms of u; kind is 'euclidean', 'l1' or 'linf'."""
        if self.uniform:
            blocks = u.reshape(self.n_blocks, self.sizes[0])
            if kind == "euclidean":
                return np.sqrt(np.einsum("ij,ij->i", blocks, blocks))
            if kind == "l1":
                return np.abs(blocks).sum(axis=1)
            if kind == "linf":
                return np.abs(blocks).max(axis=1)
        else:
            if kind == "euclidean":
                return np.sqrt(np.add.reduceat(u * u, self.offsets))
            if kind == "l1":
                return np.add.reduceat(np.abs(u), self.offsets)
            if kind == "linf":
                return np.maximum.reduceat(np.abs(u), self.offsets)
        raise ValueError(f"unknown block norm kind {kind!r}")

    def expand(self, per_block):
        """Repeat per-block scalars out to component length."""
        if self.uniform:
            return np.repeat(per_block, self.sizes[0])
        return np.repeat(per_block, self.sizes)

    def slices(self):
        for off, size in zip(self.offsets, self.sizes):
            yield slice(int(off), int(off + size))


class NormEstimate(float):
    """A float norm-squared upper bound carrying power-method metadata."""

    def __new__(cls, value, converged, iterations):
        obj = super().__new__(cls, value)
        obj.converged = bool(converged)
        obj.iterations = int(iterations)
        return obj

    def __repr__(self):
        return f"NormEstimate({float(self):.6g}, converged={self.converged}, iterations={self.iterations})"


class LinearOp:
    """Base linear map; subclasses implement _apply and _adjoint."""

    def __init__(self, in_dim, out_dim, kind, layout=None):
        if in_dim < 1 or out_dim < 1:
            raise ValueError("operator dimensions must be positive")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.kind = kind
        self.layout = layout if layout is not None else BlockLayout.uniform_blocks(out_dim, 1)
        if self.layout.total != self.out_dim:
            raise ValueError("block layout does not cover out_dim")
        self._norm_bound = None

    @property
    def block_dim(self):
        """Common block size; raises for ragged layouts (use .layout.sizes)."""
        if not self.layout.uniform:
            raise ValueError(f"{self.kind} operator has ragged blocks {self.layout.sizes}")
        return int(self.layout.sizes[0])

    def apply(self, x):
        x = _as_vector(x, self.in_dim, f"apply[{self.kind}]")
        return self._apply(x)

    def adjoint_apply(self, w):
        w = _as_vector(w, self.out_dim, f"adjoint_apply[{self.kind}]")
        return self._adjoint(w)

    def norm_sq_bound(self):
        """Cached upper bound on the squared operator norm."""
        if self._norm_bound is None:
            self._norm_bound = norm_sq_estimate(self)
        return self._norm_bound

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind} {self.out_dim}x{self.in_dim}>"


def apply(op, x):
    return op.apply(x)


def adjoint_apply(op, w):
    return op.adjoint_apply(w)


def norm_sq_estimate(op, tol=1e-6, max_iter=500):
    """Upper bound on the largest eigenvalue of op^T op by power iteration.

    The Rayleigh quotient estimate is inflated by 1.01 so that downstream
    step-size conditions stay valid even with an imperfectly converged
    estimate. The start vector comes from a fixed seed, so repeated calls
    give identical results. A zero operator yields 0. If the iteration does
    not converge within max_iter, the inflated current estimate is returned
    with converged=False.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(op.in_dim)
    nv = np.linalg.norm(v)
    v /= nv
    lam_prev = 0.0
    for it in range(1, max_iter + 1):
        s = op.adjoint_apply(op.apply(v))
        lam = float(np.dot(v, s))
        ns = np.linalg.norm(s)
        if ns == 0.0:
            return NormEstimate(0.0, True, it)
        v = s / ns
        if it > 1 and abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            return NormEstimate(_NORM_INFLATION * lam, True, it)
        lam_prev = lam
    return NormEstimate(_NORM_INFLATION * lam_prev, False, max_iter)


class IdentityOp(LinearOp):
    def __init__(self, n):
        super().__init__(n, n, "identity")

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, w):
        return w.copy()


class DenseOp(LinearOp):
    def __init__(self, matrix, layout=None):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("dense operator needs a 2d matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("dense operator entries must be finite")
        super().__init__(m.shape[1], m.shape[0], "dense", layout)
        self.matrix = m

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, w):
        return self.matrix.T @ w


class SparseOp(LinearOp):
    def __init__(self, rows, cols, triplets, layout=None):
        ii, jj, vv = [], [], []
        for t in triplets:
            if len(t) != 3:
                raise ValueError(f"malformed triplet {t!r}; expected (i, j, value)")
            i, j, v = t
            i = int(i)
            j = int(j)
            v = float(v)
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"triplet index ({i}, {j}) outside {rows}x{cols}")
            if not np.isfinite(v):
                raise ValueError(f"triplet value at ({i}, {j}) is not finite")
            ii.append(i)
            jj.append(j)
            vv.append(v)
        super().__init__(cols, rows, "sparse-triplet", layout)
        # duplicate (i, j) entries sum
        coo = sp.coo_matrix((vv, (ii, jj)), shape=(rows, cols))
        self._m = coo.tocsr()
        self._mt = self._m.T.tocsr()

    def _apply(self, x):
        return self._m @ x

    def _adjoint(self, w):
        return self._mt @ w

    def triplets(self):
        coo = self._m.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


class Gradient1D(LinearOp):
    def __init__(self, n):
        if n < 2:
            raise ValueError("1d gradient needs length >= 2")
        super().__init__(n, n - 1, "gradient-1d")

    def _apply(self, x):
        return x[1:] - x[:-1]

    def _adjoint(self, w):
        out = np.zeros(self.in_dim)
        out[:-1] -= w
        out[1:] += w
        return out


class Gradient2D(LinearOp):
    """Forward differences on an image; output block i is ((dx)_i, (dy)_i).

    dx differences run along columns, dy along rows; the trailing column/row
    rows of the output are zero, so constants map to zero exactly.
    """

    def __init__(self, rows, cols):
        if rows < 2 or cols < 2:
            raise ValueError("2d gradient needs both dimensions >= 2")
        super().__init__(rows * cols, 2 * rows * cols, "gradient-2d",
                         BlockLayout.uniform_blocks(rows * cols, 2))
        self.shape = (int(rows), int(cols))

    def _apply(self, x):
        r, c = self.shape
        img = x.reshape(r, c)
        out = np.zeros((r, c, 2))
        out[:, :-1, 0] = img[:, 1:] - img[:, :-1]
        out[:-1, :, 1] = img[1:, :] - img[:-1, :]
        return out.ravel()

    def _adjoint(self, w):
        r, c = self.shape
        blocks = w.reshape(r, c, 2)
        gx = blocks[:, :, 0]
        gy = blocks[:, :, 1]
        out = np.zeros((r, c))
        out[:, :-1] -= gx[:, :-1]
        out[:, 1:] += gx[:, :-1]
        out[:-1, :] -= gy[:-1, :]
        out[1:, :] += gy[:-1, :]
        return out.ravel()


class GroupSelector(LinearOp):
    """Rows select coordinates; one output block per group, groups may overlap."""

    def __init__(self, groups, in_dim):
        if not groups:
            raise ValueError("need at least one group")
        sizes = []
        idx = []
        for g, group in enumerate(groups):
            members = list(group)
            if not members:
                raise ValueError(f"group {g} is empty")
            for i in members:
                i = int(i)
                if not 0 <= i < in_dim:
                    raise ValueError(f"group {g} index {i} out of range for in_dim {in_dim}")
                idx.append(i)
            sizes.append(len(members))
        super().__init__(in_dim, len(idx), "group-selector", BlockLayout(sizes))
        self.groups = [tuple(int(i) for i in g) for g in groups]
        self._idx = np.asarray(idx, dtype=np.intp)

    def _apply(self, x):
        return x[self._idx]

    def _adjoint(self, w):
        return np.bincount(self._idx, weights=w, minlength=self.in_dim).astype(float)


class ScaledOp(LinearOp):
    def __init__(self, inner, c):
        c = float(c)
        if not np.isfinite(c):
            raise ValueError("scale factor must be finite")
        super().__init__(inner.in_dim, inner.out_dim, f"scaled({inner.kind})", inner.layout)
        self.inner = inner
        self.c = c

    def _apply(self, x):
        return self.c * self.inner._apply(x)

    def _adjoint(self, w):
        return self.c * self.inner._adjoint(w)


def make_identity(n):
    return IdentityOp(n)


def make_dense(rows, cols, entries):
    m = np.asarray(entries, dtype=float)
    if m.ndim == 1:
        if m.size != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {m.size}")
        m = m.reshape(rows, cols)
    elif m.shape != (rows, cols):
        raise ValueError(f"expected a {rows}x{cols} matrix, got shape {m.shape}")
    return DenseOp(m)


def make_sparse(rows, cols, triplets):
    return SparseOp(rows, cols, triplets)


def make_gradient(shape):
    """Gradient operator for a 1d signal (int or (n,)) or a 2d image (rows, cols)."""
    if np.isscalar(shape):
        return Gradient1D(int(shape))
    shape = tuple(int(s) for s in shape)
    if len(shape) == 1:
        return Gradient1D(shape[0])
    if len(shape) == 2:
        return Gradient2D(*shape)
    raise ValueError(f"unsupported gradient shape {shape}")


def make_group_selector(groups, in_dim):
    return GroupSelector(groups, in_dim)


def make_scaled(op, c):
    return ScaledOp(op, c)
