"""Quadratic minimax problem tests: analytic gradients vs independent oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from saddlemesh.problems import (
    BilinearSaddle,
    dump_dataset,
    grad_loss,
    load_dataset,
    make_quadratic,
    saddle_residual,
)


def sampled_loss(problem, k, x, y, sample_idx):
    """Reference loss value for one stored sample (the finite-diff anchor)."""
    a = problem.A[k][sample_idx]
    e = problem.E[k][sample_idx]
    return 0.5 * (a @ x) ** 2 + y @ (problem.B[k] @ x + e) - 0.5 * problem.nu * (y @ y)


@pytest.fixture(scope="module")
def desk():
    return make_quadratic(8, 16, 16, 200, 10.0, seed=42)


def test_gradients_match_finite_differences(desk):
    # central differences at 20 random points, relative error <= 1e-5
    rng = np.random.default_rng(0)
    h = 1e-5
    for _ in range(20):
        k = int(rng.integers(0, desk.K))
        s = int(rng.integers(0, 200))
        x = rng.normal(size=16)
        y = rng.normal(size=16)
        gx, gy = grad_loss(desk, k, x, y, s)
        fd_x = np.zeros(16)
        fd_y = np.zeros(16)
        for i in range(16):
            dx = np.zeros(16)
            dx[i] = h
            fd_x[i] = (sampled_loss(desk, k, x + dx, y, s) - sampled_loss(desk, k, x - dx, y, s)) / (2 * h)
            fd_y[i] = (sampled_loss(desk, k, x, y + dx, s) - sampled_loss(desk, k, x, y - dx, s)) / (2 * h)
        scale = max(1.0, np.linalg.norm(gx), np.linalg.norm(gy))
        assert np.linalg.norm(gx - fd_x) / scale < 1e-5
        assert np.linalg.norm(gy - fd_y) / scale < 1e-5


def test_gradient_at_origin_is_error_vector(desk):
    x = np.zeros(16)
    y = np.zeros(16)
    gx, gy = grad_loss(desk, 3, x, y, 17)
    assert_allclose(gx, np.zeros(16), atol=1e-15)
    assert_allclose(gy, desk.E[3][17], atol=1e-15)


def test_full_batch_equals_exact_local_gradient(desk):
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=16), rng.normal(size=16)
    for k in (0, 5):
        bx, by = desk.batch_grad(k, x, y, desk.full_batch(k))
        lx, ly = desk.local_grad(k, x, y)
        assert_allclose(bx, lx, atol=1e-12)
        assert_allclose(by, ly, atol=1e-12)


def test_single_sample_dataset_degenerates(desk):
    p = make_quadratic(3, 4, 4, 1, 10.0, seed=5)
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=4), rng.normal(size=4)
    gx, gy = grad_loss(p, 1, x, y, 0)
    lx, ly = p.local_grad(1, x, y)
    assert_allclose(gx, lx, atol=1e-14)
    assert_allclose(gy, ly, atol=1e-14)


def test_online_sampled_gradients_are_unbiased():
    # Monte-Carlo mean over 10^4 draws within 3 sigma of the exact gradient
    p = make_quadratic(2, 6, 6, 0, 10.0, mode="online", seed=9)
    rng = np.random.default_rng(123)
    x = rng.normal(size=6)
    y = rng.normal(size=6)
    n = 10_000
    Ab, Eb = p.draw_batch(0, n, rng)
    draws_x = (Ab * (Ab @ x)[:, None]) + p.B[0].T @ y  # per-sample grad_x rows
    exact_x, exact_y = p.local_grad(0, x, y)
    mean_x = draws_x.mean(axis=0)
    sem = draws_x.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(mean_x - exact_x) < 3.0 * sem + 1e-12)
    # grad_y randomness is just e with mean 0
    mean_e = Eb.mean(axis=0)
    sem_e = Eb.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(mean_e) < 3.0 * sem_e)
    assert_allclose(exact_y, p.B[0] @ x - p.nu * y, atol=1e-14)


def test_y_curvature_is_exactly_minus_nu(desk):
    rng = np.random.default_rng(3)
    x = rng.normal(size=16)
    y1, y2 = rng.normal(size=16), rng.normal(size=16)
    _, gy1 = desk.global_grad(x, y1)
    _, gy2 = desk.global_grad(x, y2)
    assert_allclose(gy1 - gy2, -desk.nu * (y1 - y2), atol=1e-12)


def test_saddle_point_zeroes_the_residual(desk):
    xs, ys = desk.saddle_point()
    rx, ry = saddle_residual(desk, xs, ys)
    assert rx < 1e-8 and ry < 1e-8
    # and a generic point does not masquerade as one
    rx0, ry0 = saddle_residual(desk, xs + 1.0, ys)
    assert rx0 > 1e-4


def test_residual_at_origin_is_mean_error_norm(desk):
    rx, ry = saddle_residual(desk, np.zeros(16), np.zeros(16))
    e_bar = np.mean([desk.E[k].mean(axis=0) for k in range(desk.K)], axis=0)
    assert rx == pytest.approx(0.0, abs=1e-20)
    assert ry == pytest.approx(float(e_bar @ e_bar), rel=1e-12)


def test_hvp_matches_gradient_difference(desk):
    # constant Hessians: grad(z + dz) - grad(z) == H dz exactly, per batch
    rng = np.random.default_rng(4)
    x, y = rng.normal(size=16), rng.normal(size=16)
    dx, dy = rng.normal(size=16), rng.normal(size=16)
    batch = desk.draw_batch(2, 7, rng)
    g1x, g1y = desk.batch_grad(2, x + dx, y + dy, batch)
    g0x, g0y = desk.batch_grad(2, x, y, batch)
    hx, hy = desk.batch_hvp(2, dx, dy, batch)
    assert_allclose(g1x - g0x, hx, atol=1e-10)
    assert_allclose(g1y - g0y, hy, atol=1e-10)


def test_generation_is_seeded_and_heterogeneous():
    p1 = make_quadratic(4, 8, 8, 50, 10.0, seed=7)
    p2 = make_quadratic(4, 8, 8, 50, 10.0, seed=7)
    for k in range(4):
        assert_allclose(p1.A[k], p2.A[k], atol=0)
        assert_allclose(p1.B[k], p2.B[k], atol=0)
    p3 = make_quadratic(4, 8, 8, 50, 10.0, seed=8)
    assert not np.allclose(p1.A[0], p3.A[0])
    # agent means drift upward with k: 1 + 0.01*(k+1)
    big = make_quadratic(3, 10, 10, 20_000, 10.0, seed=0)
    for k in range(3):
        assert big.A[k].mean() == pytest.approx(1.0 + 0.01 * (k + 1), abs=0.05)


def test_spread_interpretation_toggle():
    pv = make_quadratic(2, 4, 4, 5000, 10.0, data_spread=9.0, seed=1)
    ps = make_quadratic(2, 4, 4, 5000, 10.0, data_spread=9.0, spread_is_variance=False, seed=1)
    assert pv.A[0].std() == pytest.approx(3.0, abs=0.1)   # variance 9 -> std 3
    assert ps.A[0].std() == pytest.approx(9.0, abs=0.3)   # std 9


def test_input_validation():
    with pytest.raises(ValueError, match="dimensions"):
        make_quadratic(0, 4, 4, 10, 10.0)
    with pytest.raises(ValueError, match="nu"):
        make_quadratic(2, 4, 4, 10, -1.0)
    with pytest.raises(ValueError, match="mode"):
        make_quadratic(2, 4, 4, 10, 10.0, mode="streaming")
    online = make_quadratic(2, 4, 4, 0, 10.0, mode="online")
    with pytest.raises(ValueError, match="full batch"):
        online.full_batch(0)
    with pytest.raises(ValueError, match="integer sample"):
        grad_loss(online, 0, np.zeros(4), np.zeros(4), 3)
    with pytest.raises(ValueError, match="batch size"):
        online.draw_batch(0, 0, np.random.default_rng(0))


def test_dataset_roundtrip(tmp_path, desk):
    small = make_quadratic(3, 5, 4, 12, 10.0, seed=11)
    path = tmp_path / "dataset.csv"
    dump_dataset(small, str(path))
    back = load_dataset(str(path))
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=5), rng.normal(size=4)
    for k in range(3):
        g1 = small.local_grad(k, x, y)
        g2 = back.local_grad(k, x, y)
        assert_allclose(g1[0], g2[0], atol=0)
        assert_allclose(g1[1], g2[1], atol=0)


def test_bilinear_toy_closed_form():
    rng = np.random.default_rng(6)
    M = rng.normal(size=(3, 2))
    p = BilinearSaddle(K=4, M=M, nu=2.0)
    xs, ys = p.saddle_point()
    assert saddle_residual(p, xs, ys) == (0.0, 0.0)
    x, y = rng.normal(size=3), rng.normal(size=2)
    gx, gy = p.global_grad(x, y)
    assert_allclose(gx, x + M @ y, atol=0)
    assert_allclose(gy, M.T @ x - 2.0 * y, atol=0)
    # deterministic: any batch gives the exact gradient
    bx, by = p.batch_grad(0, x, y, p.draw_batch(0, 5, rng))
    assert_allclose(bx, gx, atol=0)
