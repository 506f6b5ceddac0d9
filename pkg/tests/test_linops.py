import numpy as np
import pytest

from oracles import grad2d_matrix, sq_norm_dense

from nsp.linops import (BlockLayout, DenseOp, Gradient2D, GroupSelector,
                        IdentityOp, NormEstimate, adjoint_apply, apply,
                        make_dense, make_gradient, make_group_selector,
                        make_identity, make_scaled, make_sparse,
                        norm_sq_estimate)


def all_ops():
    rng = np.random.default_rng(8)
    return [
        make_identity(5),
        make_dense(4, 6, rng.standard_normal((4, 6))),
        make_sparse(3, 4, [(0, 1, 2.0), (2, 3, -1.5), (0, 0, 0.5)]),
        make_gradient(6),
        make_gradient((3, 4)),
        make_group_selector([[0, 1], [1, 2], [4]], 5),
        make_scaled(make_gradient(5), -2.5),
    ]


def test_identity_apply():
    op = make_identity(3)
    assert np.array_equal(apply(op, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    assert np.array_equal(op.adjoint_apply(np.array([4.0, 5.0, 6.0])), [4.0, 5.0, 6.0])


def test_gradient_1d_values():
    op = make_gradient(3)
    assert np.array_equal(apply(op, [1.0, 2.0, 4.0]), [1.0, 2.0])
    assert np.array_equal(apply(op, [7.0, 7.0, 7.0]), [0.0, 0.0])
    assert np.array_equal(adjoint_apply(op, [1.0, 0.0]), [-1.0, 1.0, 0.0])


def test_gradient_1d_structure():
    op = make_gradient(4)
    assert op.in_dim == 4
    assert op.out_dim == 3
    assert op.block_dim == 1


def test_gradient_2d_constant_kernel_and_blocks():
    op = make_gradient((2, 2))
    assert np.array_equal(apply(op, [3.0, 3.0, 3.0, 3.0]), np.zeros(8))
    assert op.block_dim == 2
    assert op.out_dim == 8
    # gradient blocks are (dx, dy) per pixel, trailing boundary zero-padded
    x = np.array([[1.0, 2.0], [4.0, 8.0]]).ravel()
    out = apply(op, x)
    assert np.array_equal(out, [1.0, 3.0, 0.0, 6.0, 4.0, 0.0, 0.0, 0.0])


def test_gradient_2d_matches_dense_oracle():
    rng = np.random.default_rng(0)
    op = make_gradient((3, 4))
    m = grad2d_matrix(3, 4)
    for _ in range(10):
        x = rng.standard_normal(12)
        assert np.allclose(apply(op, x), m @ x, atol=1e-13)
        w = rng.standard_normal(24)
        assert np.allclose(adjoint_apply(op, w), m.T @ w, atol=1e-13)


def test_dimension_mismatch_errors():
    op = make_gradient(5)
    with pytest.raises(ValueError, match="4"):
        apply(op, np.zeros(4))
    with pytest.raises(ValueError):
        adjoint_apply(op, np.zeros(5))


def test_make_dense_and_sparse_values():
    op = make_dense(1, 2, [1.0, 1.0])
    assert np.array_equal(apply(op, [2.0, 3.0]), [5.0])
    sp = make_sparse(1, 2, [(0, 1, 2.0)])
    assert np.array_equal(apply(sp, [0.0, 5.0]), [10.0])
    ident = make_dense(2, 2, [1.0, 0.0, 0.0, 1.0])
    v = np.array([9.0, -3.0])
    assert np.array_equal(apply(ident, v), v)


def test_sparse_duplicate_triplets_sum():
    sp = make_sparse(1, 1, [(0, 0, 2.0), (0, 0, 3.0)])
    assert np.array_equal(apply(sp, [1.0]), [5.0])


def test_sparse_triplet_validation():
    with pytest.raises(ValueError):
        make_sparse(2, 2, [(0, 5, 1.0)])
    with pytest.raises(ValueError):
        make_sparse(2, 2, [(-1, 0, 1.0)])


def test_group_selector_values():
    op = make_group_selector([[0, 1], [1, 2]], 3)
    assert np.array_equal(apply(op, [3.0, 4.0, 0.0]), [3.0, 4.0, 4.0, 0.0])
    assert op.layout.sizes == (2, 2)
    # adjoint accumulates overlapping contributions
    assert np.array_equal(adjoint_apply(op, [1.0, 1.0, 1.0, 1.0]), [1.0, 2.0, 1.0])


def test_group_selector_disjoint_cover_is_orthogonal():
    op = make_group_selector([[2], [0], [1]], 3)
    rng = np.random.default_rng(4)
    x = rng.standard_normal(3)
    assert np.allclose(adjoint_apply(op, apply(op, x)), x, atol=1e-15)


def test_group_selector_validation():
    with pytest.raises(ValueError):
        make_group_selector([[0], []], 2)
    with pytest.raises(ValueError):
        make_group_selector([[0, 7]], 3)


def test_scaled_op():
    base = make_gradient(4)
    op = make_scaled(base, -2.0)
    x = np.array([1.0, 3.0, 6.0, 10.0])
    assert np.allclose(apply(op, x), -2.0 * apply(base, x))
    assert np.allclose(adjoint_apply(op, np.ones(3)), -2.0 * adjoint_apply(base, np.ones(3)))


def test_adjoint_identity_all_ops():
    rng = np.random.default_rng(11)
    for op in all_ops():
        for _ in range(100):
            x = rng.standard_normal(op.in_dim)
            w = rng.standard_normal(op.out_dim)
            ax = apply(op, x)
            lhs = float(np.dot(ax, w))
            rhs = float(np.dot(x, adjoint_apply(op, w)))
            assert abs(lhs - rhs) <= 1e-12 * (1.0 + np.linalg.norm(ax) * np.linalg.norm(w))


def test_linearity_all_ops():
    rng = np.random.default_rng(12)
    for op in all_ops():
        x = rng.standard_normal(op.in_dim)
        z = rng.standard_normal(op.in_dim)
        a, b = rng.standard_normal(2)
        lhs = apply(op, a * x + b * z)
        rhs = a * apply(op, x) + b * apply(op, z)
        scale = max(1.0, float(np.linalg.norm(rhs)))
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale


def test_norm_estimate_identity():
    est = norm_sq_estimate(make_identity(5))
    assert 1.0 <= est <= 1.01


def test_norm_estimate_gradient_1d():
    # eigenvalues of the 3-point forward-difference normal matrix are {0,1,3}
    est = norm_sq_estimate(make_gradient(3))
    assert 3.0 <= est <= 3.0 * 1.01 + 1e-12


def test_norm_estimate_gradient_2d():
    est = norm_sq_estimate(make_gradient((2, 2)))
    assert est <= 8.08 + 1e-9
    assert est >= sq_norm_dense(grad2d_matrix(2, 2)) - 1e-9


def test_norm_estimate_scaled():
    base = make_gradient(7)
    assert norm_sq_estimate(make_scaled(base, 3.0)) == pytest.approx(
        9.0 * norm_sq_estimate(base), rel=1e-10)


def test_norm_estimate_duplicated_group():
    est = norm_sq_estimate(make_group_selector([[0], [0]], 1))
    assert 2.0 <= est <= 2.02 + 1e-12


def test_norm_estimate_zero_operator():
    assert norm_sq_estimate(make_dense(2, 2, np.zeros((2, 2)))) == 0.0


def test_norm_estimate_matches_dense_oracle():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((6, 9))
    est = norm_sq_estimate(make_dense(6, 9, m))
    exact = sq_norm_dense(m)
    assert exact <= est <= exact * 1.011


def test_norm_estimate_reports_convergence():
    est = norm_sq_estimate(make_gradient(10))
    assert isinstance(est, NormEstimate)
    assert est.converged
    assert est.iterations >= 1


def test_norm_bound_soundness():
    rng = np.random.default_rng(6)
    for op in all_ops():
        bound = norm_sq_estimate(op)
        for _ in range(100):
            x = rng.standard_normal(op.in_dim)
            ax = apply(op, x)
            assert float(np.dot(ax, ax)) <= bound * float(np.dot(x, x)) * (1 + 1e-12)


def test_block_layout():
    layout = BlockLayout.uniform_blocks(3, 2)
    assert layout.total == 6
    assert layout.sizes == (2, 2, 2)
    assert layout.offsets == (0, 2, 4)
    norms = layout.block_norms(np.array([3.0, 4.0, 0.0, 1.0, -2.0, 0.0]), "euclidean")
    assert np.allclose(norms, [5.0, 1.0, 2.0])


def test_block_layout_ragged_norms():
    layout = BlockLayout((1, 3))
    u = np.array([2.0, 1.0, -2.0, 2.0])
    assert np.allclose(layout.block_norms(u, "euclidean"), [2.0, 3.0])
    assert np.allclose(layout.block_norms(u, "l1"), [2.0, 5.0])
    assert np.allclose(layout.block_norms(u, "linf"), [2.0, 2.0])


def test_block_dim_property():
    assert make_gradient((2, 3)).block_dim == 2
    ragged = make_group_selector([[0], [0, 1]], 2)
    with pytest.raises(ValueError):
        _ = ragged.block_dim


def test_apply_rejects_non_vector():
    with pytest.raises(ValueError):
        apply(make_identity(4), np.zeros((2, 2)))


def test_dense_op_exposes_matrix():
    m = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(DenseOp(m).matrix, m)
