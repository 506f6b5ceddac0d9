"""The oracles must hold up on their own before other tests trust them."""

import numpy as np
import pytest

from oracles import (clamp_scalar, constant_image_ls, cvx_solve, grad1d_matrix,
                     grad2d_matrix, proj_l1_ball_bisect, proj_l2_ball,
                     prox_scalar_abs_grid, soft_scalar, sq_norm_dense,
                     tv2_exact, tv2_grid, tv2_objective)


def test_tv2_exact_matches_grid_search():
    rng = np.random.default_rng(0)
    for _ in range(25):
        y1, y2 = rng.uniform(-5, 5, size=2)
        lam = rng.uniform(0.05, 6.0)
        gx1, gx2 = tv2_grid(y1, y2, lam)
        ex1, ex2, _ = tv2_exact(y1, y2, lam)
        assert abs(gx1 - ex1) < 2e-4
        assert abs(gx2 - ex2) < 2e-4
        # the claimed minimizer is never beaten by the grid
        assert tv2_objective(ex1, ex2, y1, y2, lam) <= tv2_objective(gx1, gx2, y1, y2, lam) + 1e-12


def test_tv2_frozen_values():
    x1, x2, w = tv2_exact(0.0, 10.0, 1.0)
    assert (x1, x2, w) == (1.0, 9.0, 1.0)
    x1, x2, w = tv2_exact(0.0, 10.0, 100.0)
    assert (x1, x2) == (5.0, 5.0)
    assert w == 5.0
    # separated regime needs y2 - y1 > 2*lam
    x1, x2, _ = tv2_exact(0.0, 10.0, 5.0)
    assert (x1, x2) == (5.0, 5.0)


def test_tv2_exact_satisfies_stationarity():
    for (y1, y2, lam) in [(0, 10, 1), (3, -2, 0.7), (1, 1.5, 2)]:
        x1, x2, w = tv2_exact(y1, y2, lam)
        assert abs(w) <= lam + 1e-15
        # x = y - A^T w with A = [-1, 1]
        assert x1 == pytest.approx(y1 + w, abs=1e-14)
        assert x2 == pytest.approx(y2 - w, abs=1e-14)


def test_gradient_matrix_eigenvalues():
    m = grad1d_matrix(3)
    evals = np.sort(np.linalg.eigvalsh(m.T @ m))
    assert np.allclose(evals, [0.0, 1.0, 3.0], atol=1e-12)
    assert sq_norm_dense(m) == pytest.approx(3.0, abs=1e-12)


def test_grad2d_matrix_shape_and_kernel():
    m = grad2d_matrix(2, 2)
    assert m.shape == (8, 4)
    assert np.all(m @ np.ones(4) == 0.0)
    assert sq_norm_dense(m) <= 8.0 + 1e-12


def test_sq_norm_dense_scaling():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((4, 6))
    assert sq_norm_dense(3.0 * m) == pytest.approx(9.0 * sq_norm_dense(m), rel=1e-12)


def test_proj_l1_ball_bisect_frozen():
    assert np.allclose(proj_l1_ball_bisect([3.0, 0.0], 1.0), [1.0, 0.0], atol=1e-10)
    assert np.allclose(proj_l1_ball_bisect([2.0, 1.0], 1.0), [1.0, 0.0], atol=1e-10)
    v = np.array([0.2, -0.3])
    assert np.array_equal(proj_l1_ball_bisect(v, 1.0), v)


def test_proj_l1_ball_bisect_is_the_nearest_point():
    rng = np.random.default_rng(2)
    for _ in range(50):
        v = rng.standard_normal(6) * 2
        r = rng.uniform(0.3, 3.0)
        p = proj_l1_ball_bisect(v, r)
        assert np.abs(p).sum() <= r + 1e-9
        for _ in range(40):
            z = rng.standard_normal(6)
            z = z / np.abs(z).sum() * r * rng.uniform(0, 1)
            assert np.linalg.norm(v - p) <= np.linalg.norm(v - z) + 1e-9


def test_scalar_prox_oracles_agree():
    rng = np.random.default_rng(3)
    for _ in range(30):
        u = rng.uniform(-4, 4)
        lam = rng.uniform(0.05, 3.0)
        assert prox_scalar_abs_grid(u, lam) == pytest.approx(soft_scalar(u, lam), abs=1e-6)
        assert abs(clamp_scalar(u, lam)) <= lam
        assert soft_scalar(u, lam) + clamp_scalar(u, lam) == pytest.approx(u, abs=1e-14)


def test_proj_l2_ball_basics():
    assert np.allclose(proj_l2_ball([3.0, 4.0], 1.0), [0.6, 0.8])
    v = np.array([0.1, 0.2])
    assert np.array_equal(proj_l2_ball(v, 1.0), v)


def test_cvx_agrees_with_tv2_closed_form():
    K = np.eye(2)
    A = np.array([[-1.0, 1.0]])
    x = cvx_solve(K, [0.0, 10.0], 1.0, A, [1])
    assert np.allclose(x, [1.0, 9.0], atol=1e-6)


def test_constant_image_ls():
    y = np.array([1.0, 2.0, 6.0])
    xc = constant_image_ls(np.eye(3), y, 3)
    assert np.allclose(xc, np.full(3, 3.0), atol=1e-12)
