"""Penalties H(u) = lambda * sum of within-block norms, with closed-form prox pairs.

The conjugate of each penalty is the indicator of a per-block dual-norm ball of
radius lambda, so the conjugate prox is a projection and is invariant under the
scale parameter. The primal prox is always computed as the Moreau complement
u - prox_conjugate(u), which makes the complement identity exact in floating
point.

Projections are "nudged": after the analytic shrink, the block norm is
recomputed exactly as a second call would compute it, and the shrink factor is
tightened by ulp steps until that recomputed norm is within the radius. This
makes every projection bitwise idempotent and its output exactly feasible.
"""

from dataclasses import dataclass, field

import numpy as np

from .linops import BlockLayout

NORM_KINDS = ("block-euclidean", "block-l1", "block-linf")

# dual within-block norm for each primal norm kind
_DUAL_OF = {"block-euclidean": "euclidean", "block-l1": "linf", "block-linf": "l1"}
_PRIMAL_OF = {"block-euclidean": "euclidean", "block-l1": "l1", "block-linf": "linf"}


@dataclass(frozen=True)
class Penalty:
    lam: float
    norm_kind: str
    layout: BlockLayout = field(compare=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"penalty weight must be positive, got {self.lam}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")


def _checked(p, u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        u = u.ravel()
    p.layout.check(u, "penalty input")
    return u


def penalty_value(p: Penalty, u) -> float:
    """H(u) = lambda * sum over blocks of the within-block norm."""
    u = _checked(p, u)
    return p.lam * float(p.layout.block_norms(u, _PRIMAL_OF[p.norm_kind]).sum())


def dual_norms(p: Penalty, w):
    """Per-block dual norms of w (the quantity bounded by lambda on the feasible set)."""
    w = _checked(p, w)
    return p.layout.block_norms(w, _DUAL_OF[p.norm_kind])


def dual_feasible(p: Penalty, w, slack=1e-12) -> bool:
    return bool(np.all(dual_norms(p, w) <= p.lam + slack * (1.0 + p.lam)))


def _seg_norm_euclidean(layout, block):
    # must reproduce block_norms('euclidean') bitwise for a lone block; the
    # summation order differs between the uniform and ragged layout paths
    if layout.uniform:
        return float(np.sqrt(np.einsum("ij,ij->i", block[None, :], block[None, :])[0]))
    return float(np.sqrt(np.add.reduceat(block * block, [0])[0]))


def _project_blocks_euclidean(layout, u, radius):
    """Per-block Euclidean ball projection, bitwise idempotent."""
    norms = layout.block_norms(u, "euclidean")
    over = norms > radius
    if not np.any(over):
        return u.copy()
    factors = np.ones(layout.n_blocks)
    factors[over] = radius / norms[over]
    out = u * layout.expand(factors)
    offsets = layout.offsets
    sizes = layout.sizes
    # tighten any block still over the radius, then re-verify with the same
    # norm computation every later feasibility check will use
    while True:
        bad = np.flatnonzero(layout.block_norms(out, "euclidean") > radius)
        if not bad.size:
            return out
        for b in bad:
            sl = slice(int(offsets[b]), int(offsets[b] + sizes[b]))
            f = factors[b]
            step = np.spacing(f)
            while True:
                f -= step
                block = u[sl] * f
                if _seg_norm_euclidean(layout, block) <= radius:
                    out[sl] = block
                    factors[b] = f
                    break
                step *= 2.0


def _seg_norm_l1(z):
    # sequential per-segment sum, matching block_norms('l1') on ragged layouts
    return float(np.add.reduceat(np.abs(z), [0])[0])


def _project_l1(v, radius, l1norm=None):
    """Euclidean projection of a single vector onto the l1 ball, bitwise idempotent.

    l1norm, when given, overrides the feasibility criterion so callers can
    match whatever summation order their later checks will use.
    """
    if l1norm is None:
        l1norm = lambda z: np.abs(z).sum()
    if l1norm(v) <= radius:
        return v.copy()
    av = np.abs(v)
    # sort-based threshold: theta such that sum(max(av - theta, 0)) = radius
    s = np.sort(av)[::-1]
    cums = np.cumsum(s)
    k = np.arange(1, s.size + 1)
    cand = (cums - radius) / k
    rho = np.max(np.flatnonzero(s > cand))
    theta = cand[rho]
    step = np.spacing(theta)
    while True:
        z = np.sign(v) * np.maximum(av - theta, 0.0)
        if l1norm(z) <= radius:
            return z
        theta += step
        step *= 2.0


def project_l1_ball(v, radius: float):
    """Euclidean projection of v onto {z : sum|z_i| <= radius}."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    return _project_l1(v, radius)


def prox_conjugate(p: Penalty, u, scale: float = 1.0):
    """Prox of scale * H* at u: the per-block dual-ball projection.

    The conjugate is an indicator, so the result does not depend on scale; the
    parameter is kept so call sites can mirror the iteration they implement.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = _checked(p, u)
    if p.norm_kind == "block-euclidean":
        return _project_blocks_euclidean(p.layout, u, p.lam)
    if p.norm_kind == "block-l1":
        return np.clip(u, -p.lam, p.lam)
    out = u.copy()
    seg = None if p.layout.uniform else _seg_norm_l1
    l1_norms = p.layout.block_norms(u, "l1")
    for b, sl in enumerate(p.layout.slices()):
        if l1_norms[b] > p.lam:
            out[sl] = _project_l1(u[sl], p.lam, l1norm=seg)
    return out


def prox_primal(p: Penalty, u, scale: float = 1.0):
    """Prox of H at u, computed as the exact complement u - prox_conjugate(u)."""
    u = _checked(p, u)
    return u - prox_conjugate(p, u, scale)


def soft_threshold(p: Penalty, u):
    """Block soft-thresholding: shrink each block norm by lambda, zeroing small blocks."""
    if p.norm_kind != "block-euclidean":
        raise ValueError("soft_threshold is defined for the block-euclidean penalty")
    u = _checked(p, u)
    return u - _project_blocks_euclidean(p.layout, u, p.lam)


def project_linf_ball(p: Penalty, u):
    """Per-block clip of the block magnitude to lambda (the conjugate prox)."""
    if p.norm_kind != "block-euclidean":
        raise ValueError("project_linf_ball is defined for the block-euclidean penalty")
    u = _checked(p, u)
    return _project_blocks_euclidean(p.layout, u, p.lam)
