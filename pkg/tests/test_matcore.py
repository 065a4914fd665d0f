import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import hilbert

from godeckit.exceptions import DimensionError, ParameterError
from godeckit.matcore import (
    RngSeed,
    as_matrix,
    as_seed,
    gaussian_matrix,
    hard_threshold_entries,
    jacobi_svd,
    numerical_rank,
    qr_thin,
    rel_error,
    soft_threshold,
    svd_full,
    svd_truncate,
)
from oracles import als_low_rank, power_iteration_sigma1, soft_threshold_loop, subset_residuals

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
HILBERT8_SIGMA1 = 1.6959389  # power iteration on H^T H, frozen


def test_seed_streams_are_reproducible_and_distinct():
    a = RngSeed(5, "x").generator().standard_normal(4)
    assert np.array_equal(a, RngSeed(5, "x").generator().standard_normal(4))
    assert not np.array_equal(a, RngSeed(5, "y").generator().standard_normal(4))
    assert not np.array_equal(a, RngSeed(6, "x").generator().standard_normal(4))
    assert RngSeed(5, "x").child("c") == RngSeed(5, "x/c")
    assert as_seed(None) == RngSeed(0)
    with pytest.raises(ParameterError):
        RngSeed(-1)
    with pytest.raises(ParameterError):
        RngSeed(2**64)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_matrix(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        as_matrix(np.zeros(3))
    with pytest.raises(ParameterError):
        as_matrix([[1.0, np.nan]])


def test_gaussian_matrix_determinism_and_moments():
    assert gaussian_matrix(1, 1, 1.0, 3)[0, 0] == gaussian_matrix(1, 1, 1.0, 3)[0, 0]
    g = gaussian_matrix(1000, 1000, 1.0, RngSeed(11, "moments"))
    assert abs(g.mean()) <= 0.01
    assert abs(g.var() - 1.0) <= 0.02
    scaled = gaussian_matrix(500, 25, 1 / np.sqrt(500), 4)
    assert scaled.shape == (500, 25)
    assert abs(scaled.var() * 500 - 1.0) < 0.1
    with pytest.raises(DimensionError):
        gaussian_matrix(0, 3)
    with pytest.raises(ParameterError):
        gaussian_matrix(2, 3, scale=0.0)


def test_qr_examples():
    q, r = qr_thin(np.eye(3))
    assert np.allclose(q, np.eye(3)) and np.allclose(r, np.eye(3))
    q, r = qr_thin(np.array([[3.0], [4.0]]))
    assert np.allclose(q[:, 0], [0.6, 0.8]) and np.isclose(r[0, 0], 5.0)
    with pytest.raises(DimensionError):
        qr_thin(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 30), st.integers(0, 2**32))
def test_qr_properties(m, n, seed):
    if m < n:
        m, n = n, m
    a = np.random.default_rng(seed).standard_normal((m, n))
    q, r = qr_thin(a)
    assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-10
    assert np.linalg.norm(q @ r - a) <= 1e-10 * np.linalg.norm(a)
    assert np.all(np.diag(r) >= 0) and np.allclose(r, np.triu(r))


def test_qr_large():
    a = np.random.default_rng(0).standard_normal((500, 100))
    q, r = qr_thin(a)
    assert np.max(np.abs(q.T @ q - np.eye(100))) <= 1e-10
    assert np.linalg.norm(q @ r - a) <= 1e-10 * np.linalg.norm(a)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_svd_examples(method):
    assert np.allclose(svd_full(np.diag([3.0, 1.0]), method).sigma, [3, 1])
    x, y = np.arange(1.0, 5.0), np.array([1.0, -2.0, 2.0])
    s = svd_full(np.outer(x, y), method).sigma
    assert np.isclose(s[0], np.linalg.norm(x) * np.linalg.norm(y))
    assert np.all(s[1:] < 1e-12)
    h = svd_full(hilbert(8), method).sigma
    assert abs(h[0] - HILBERT8_SIGMA1) <= 1e-6


def test_hilbert_oracle_is_frozen_value():
    assert abs(power_iteration_sigma1(hilbert(8)) - HILBERT8_SIGMA1) <= 1e-6


@pytest.mark.parametrize("shape", [(7, 7), (12, 5), (5, 12), (30, 30)])
@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_svd_factor_invariants(shape, method):
    a = np.random.default_rng(sum(shape)).standard_normal(shape)
    u, s, v = svd_full(a, method)
    p = min(shape)
    assert np.max(np.abs(u.T @ u - np.eye(p))) <= 1e-10
    assert np.max(np.abs(v.T @ v - np.eye(p))) <= 1e-10
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.linalg.norm(u * s @ v.T - a) <= 1e-9 * np.linalg.norm(a)
    eig = np.sqrt(np.clip(np.sort(np.linalg.eigvalsh(a.T @ a))[::-1][:p], 0, None))
    assert np.allclose(s, eig, rtol=1e-9, atol=1e-12)


def test_jacobi_rank_deficient_keeps_orthonormal_columns():
    a = np.random.default_rng(2).standard_normal((9, 2)) @ np.random.default_rng(3).standard_normal((2, 6))
    u, s, v = jacobi_svd(a)
    assert np.max(np.abs(u.T @ u - np.eye(6))) <= 1e-10
    assert np.linalg.norm(u * s @ v.T - a) <= 1e-9 * np.linalg.norm(a)
    assert numerical_rank(a) == 2


def test_svd_truncate_examples():
    assert np.allclose(svd_truncate(np.diag([3.0, 1.0]), 1), np.diag([3.0, 0.0]))
    a = np.random.default_rng(1).standard_normal((6, 2)) @ np.random.default_rng(2).standard_normal((2, 5))
    assert np.allclose(svd_truncate(a, 2), a, atol=1e-10)
    for bad in (0, 6):
        with pytest.raises(ParameterError):
            svd_truncate(a, bad)


def test_svd_truncate_against_als_oracle():
    a = np.random.default_rng(10).standard_normal((10, 10))
    s = np.linalg.svd(a, compute_uv=False)
    resid = np.linalg.norm(a - svd_truncate(a, 3))
    assert abs(resid - np.sqrt(np.sum(s[3:] ** 2))) <= 1e-9 * resid
    assert als_low_rank(a, 3, restarts=200) >= resid - 1e-6


def test_svd_truncate_optimality_100():
    rng = np.random.default_rng(20)
    for _ in range(100):
        a = rng.standard_normal((8, 8))
        r = int(rng.integers(1, 8))
        s = np.linalg.svd(a, compute_uv=False)
        want = np.sqrt(np.sum(s[r:] ** 2))
        assert abs(np.linalg.norm(a - svd_truncate(a, r)) - want) <= 1e-9 * want


def test_hard_threshold_examples():
    out = hard_threshold_entries(np.array([[3.0, -1.0], [0.5, 2.0]]), 2)
    assert np.array_equal(out, [[3.0, 0.0], [0.0, 2.0]])
    assert not hard_threshold_entries(np.ones((3, 3)), 0).any()
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = hard_threshold_entries(x, 2)
    assert np.array_equal(out, [[0.0, 0.0], [3.0, 4.0]])
    sizes, resid = subset_residuals(x)
    assert np.isclose(np.linalg.norm(x - out) ** 2, 5.0)
    assert np.isclose(resid[sizes == 2].min(), 5.0)
    with pytest.raises(ParameterError):
        hard_threshold_entries(x, 5)


def test_hard_threshold_ties_go_to_earlier_index():
    x = np.array([[1.0, -2.0], [2.0, 2.0]])
    assert np.array_equal(hard_threshold_entries(x, 2), [[0.0, -2.0], [2.0, 0.0]])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 4), elements=finite), st.integers(0, 16))
def test_hard_threshold_card_and_optimality(x, k):
    s = hard_threshold_entries(x, k)
    assert np.count_nonzero(s) <= k
    kept = s != 0
    assert np.array_equal(s[kept], x[kept])
    sizes, resid = subset_residuals(x)
    got = np.sum((x - s) ** 2)
    assert got <= resid[sizes == k].min() + 1e-9 * max(1.0, np.sum(x * x))


def test_soft_threshold_examples():
    x = np.random.default_rng(0).standard_normal((5, 5))
    assert np.array_equal(soft_threshold(x, 0.0), x)
    assert np.array_equal(soft_threshold(np.array([[2.0, -0.5]]), 1.0), [[1.0, 0.0]])
    assert np.array_equal(soft_threshold(x, 0.3), soft_threshold_loop(x, 0.3))
    with pytest.raises(ParameterError):
        soft_threshold(x, -0.1)


@given(finite, finite, st.floats(0, 100))
def test_soft_threshold_lipschitz(a, b, lam):
    sa = soft_threshold(np.array([[a]]), lam)[0, 0]
    sb = soft_threshold(np.array([[b]]), lam)[0, 0]
    assert abs(sa - sb) <= abs(a - b) + 1e-12


def test_rel_error():
    x = np.random.default_rng(0).standard_normal((3, 4))
    assert rel_error(x, x) == 0.0
    assert rel_error(x, np.zeros_like(x)) == 1.0
    assert np.isclose(rel_error(np.diag([3.0, 4.0]), np.diag([3.0, 0.0])), 0.64)
    with pytest.raises(DimensionError):
        rel_error(x, x[:, :2])
    with pytest.raises(ParameterError):
        rel_error(np.zeros((2, 2)), x[:2, :2])
