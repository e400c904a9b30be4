import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from planarbingham.errors import DegenerateFrameError, InvalidArgumentError
from planarbingham.mat3 import (
    eig_sym3,
    eig_sym3_batch,
    gram_schmidt_rotation,
    is_rotation,
    matrix_to_quat,
    quat_to_matrix,
    random_rotation,
    triu_adjoint,
    triu_pack,
    triu_unpack,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
packed = arrays(np.float64, (6,), elements=finite)


def test_triu_roundtrip_example():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    A = triu_unpack(a)
    assert np.array_equal(A, [[1, 2, 3], [2, 4, 5], [3, 5, 6]])
    assert np.array_equal(triu_pack(A), a)


@given(packed)
def test_triu_pack_inverts_unpack(a):
    assert np.array_equal(triu_pack(triu_unpack(a)), a)


@given(packed, arrays(np.float64, (3, 3), elements=finite))
def test_triu_adjoint_is_chain_rule(a, G):
    # d/da <G, unpack(a)> must equal triu_adjoint(G) for symmetric G
    G = 0.5 * (G + G.T)
    g = triu_adjoint(G)
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        assert g[k] == pytest.approx(np.sum(G * triu_unpack(e)), rel=1e-12, abs=1e-9)


def test_triu_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        triu_unpack(np.ones(5))
    with pytest.raises(InvalidArgumentError):
        triu_unpack([1.0, 2.0, np.nan, 0.0, 0.0, 0.0])


def test_eig_diagonal_sorted():
    lam, D = eig_sym3(np.diag([3.0, -1.0, 2.0]))
    assert np.array_equal(lam, [-1.0, 2.0, 3.0])
    assert np.allclose(np.abs(D), np.eye(3)[:, [1, 2, 0]])
    assert np.linalg.det(D) == pytest.approx(1.0)


@settings(max_examples=200)
@given(packed)
def test_eig_reconstructs_and_matches_lapack(a):
    A = triu_unpack(a)
    lam, D = eig_sym3(A)
    scale = max(1.0, np.abs(A).max())
    assert np.allclose(D @ np.diag(lam) @ D.T, A, atol=1e-11 * scale)
    assert np.allclose(D.T @ D, np.eye(3), atol=1e-12)
    assert np.linalg.det(D) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(lam) >= 0)
    assert np.allclose(lam, np.linalg.eigvalsh(A), atol=1e-11 * scale)


def test_eig_repeated_eigenvalues():
    R = random_rotation(np.random.default_rng(4))
    A = R @ np.diag([-2.0, -2.0, 5.0]) @ R.T
    lam, D = eig_sym3(A)
    assert np.allclose(lam, [-2.0, -2.0, 5.0], atol=1e-12)
    assert abs(D[:, 2] @ R[:, 2]) == pytest.approx(1.0, abs=1e-12)


def test_eig_sign_convention_deterministic():
    A = triu_unpack([1.0, 0.3, -0.2, 2.0, 0.5, -1.0])
    lam1, D1 = eig_sym3(A)
    lam2, D2 = eig_sym3(A.copy())
    assert np.array_equal(D1, D2) and np.array_equal(lam1, lam2)
    for k in range(2):
        col = D1[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_eig_batch_matches_single():
    rng = np.random.default_rng(0)
    A = triu_unpack(rng.normal(size=(50, 6)))
    lam, D = eig_sym3_batch(A)
    for k in range(50):
        l1, D1 = eig_sym3(A[k])
        assert np.array_equal(l1, lam[k]) and np.array_equal(D1, D[k])


def test_gram_schmidt_example():
    R = gram_schmidt_rotation([0.0, 0.0, -2.0], [0.3, 1.0, 0.4])
    assert is_rotation(R)
    assert np.allclose(R[:, 0], [0, 0, -1])
    assert R[:, 2] @ np.array([0.3, 1.0, 0.0]) > 0


@given(arrays(np.float64, (3,), elements=finite), arrays(np.float64, (3,), elements=finite))
def test_gram_schmidt_is_rotation(ex, ez):
    try:
        R = gram_schmidt_rotation(ex, ez)
    except DegenerateFrameError:
        return
    assert is_rotation(R, tol=1e-9)
    assert np.allclose(R[:, 0], ex / np.linalg.norm(ex))


def test_gram_schmidt_degenerate():
    with pytest.raises(DegenerateFrameError):
        gram_schmidt_rotation([1.0, 0, 0], [2.0, 0, 0])
    with pytest.raises(DegenerateFrameError):
        gram_schmidt_rotation([0.0, 0, 0], [0, 1.0, 0])


def test_quaternion_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(100):
        R = random_rotation(rng)
        q = matrix_to_quat(R)
        assert q[0] >= 0
        assert np.allclose(quat_to_matrix(q), R, atol=1e-12)


def test_gram_schmidt_spec_examples():
    R = gram_schmidt_rotation([1.0, 0, 0], [0.1, 0, 1.0])
    assert np.allclose(R, np.eye(3))
    R = gram_schmidt_rotation([1.0, 1.0, 0] / np.sqrt(2), [0, 0, 1.0])
    assert is_rotation(R)


def test_eig_axis_aligned_example():
    lam, D = eig_sym3(np.diag([-50.0, -10.0, 0.0]))
    assert np.array_equal(lam, [-50.0, -10.0, 0.0])
    assert np.array_equal(np.abs(D), np.eye(3))
