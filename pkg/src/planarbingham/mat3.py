"""3-vectors and 3x3 matrices: packing, symmetric eigendecomposition, frames.

Vectors are ``(3,)`` float arrays and matrices ``(3, 3)`` float arrays.
Rotation matrices store the frame axes as columns ``[e_x e_y e_z]``.
"""
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ConvergenceError, DegenerateFrameError, InvalidArgumentError

# Row-major upper triangle: (A11, A12, A13, A22, A23, A33).
_TRIU_ROWS = np.array([0, 0, 0, 1, 1, 2])
_TRIU_COLS = np.array([0, 1, 2, 1, 2, 2])


class EigSym3(NamedTuple):
    """Ascending eigenvalues and the matching right-handed eigenvector frame."""

    lam: np.ndarray
    D: np.ndarray


def _finite(arr, name):
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite")
    return arr


def triu_pack(A):
    """Packs a symmetric 3x3 matrix into its 6 upper-triangular entries."""
    A = _finite(A, "A")
    if A.shape[-2:] != (3, 3):
        raise InvalidArgumentError(f"A must have shape (..., 3, 3), got {A.shape}")
    return A[..., _TRIU_ROWS, _TRIU_COLS].copy()


def triu_unpack(a):
    """Inverse of :func:`triu_pack`; accepts a leading batch axis."""
    a = _finite(a, "a")
    if a.shape[-1] != 6:
        raise InvalidArgumentError(f"a must have trailing length 6, got {a.shape}")
    A = np.empty(a.shape[:-1] + (3, 3))
    A[..., _TRIU_ROWS, _TRIU_COLS] = a
    A[..., _TRIU_COLS, _TRIU_ROWS] = a
    return A


def triu_adjoint(G):
    """Maps a gradient w.r.t. a symmetric matrix onto the packed coordinates.

    Off-diagonal packed entries feed two matrix slots, so their derivative
    is doubled.
    """
    G = np.asarray(G, dtype=np.float64)
    g = G[..., _TRIU_ROWS, _TRIU_COLS] + G[..., _TRIU_COLS, _TRIU_ROWS]
    g[..., [0, 3, 5]] *= 0.5
    return g


def _canonicalize(lam, D):
    order = np.argsort(lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    D = np.take_along_axis(D, order[:, None, :], axis=-1)
    # largest-magnitude component of each eigenvector made non-negative
    big = np.argmax(np.abs(D), axis=1)
    pick = np.take_along_axis(D, big[:, None, :], axis=1)[:, 0, :]
    D = D * np.where(pick < 0.0, -1.0, 1.0)[:, None, :]
    det = np.linalg.det(D)
    D[:, :, 2] *= np.where(det < 0.0, -1.0, 1.0)[:, None]
    return lam, D


def eig_sym3_batch(A):
    """Batched :func:`eig_sym3`; ``A`` has shape ``(n, 3, 3)``."""
    A = _finite(A, "A")
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    lam, D, sweeps = kernels.jacobi3(np.ascontiguousarray(A))
    if np.any(sweeps < 0):
        raise ConvergenceError("Jacobi iteration did not converge within the sweep cap")
    return EigSym3(*_canonicalize(lam, D))


def eig_sym3(A):
    """Eigendecomposition A = D diag(lam) D^T of a symmetric 3x3 matrix.

    Eigenvalues ascend.  Each eigenvector has its largest-magnitude entry
    non-negative, after which the last column is negated if needed so that
    det(D) = +1.  The result depends only on the input bits.
    """
    A = _finite(A, "A")
    if A.shape != (3, 3):
        raise InvalidArgumentError(f"A must be 3x3, got {A.shape}")
    res = eig_sym3_batch(A[None])
    return EigSym3(res.lam[0], res.D[0])


def gram_schmidt_rotation(e_x, e_z):
    """Rotation [e_x, e_z x e_x, e_z] built from an approach axis and a rough e_z.

    ``e_x`` is normalized and kept; ``e_z`` loses its component along
    ``e_x`` and is renormalized.
    """
    e_x = _finite(e_x, "e_x")
    e_z = _finite(e_z, "e_z")
    nx = np.linalg.norm(e_x)
    if nx <= 1e-9:
        raise DegenerateFrameError("e_x has (near) zero length")
    ex = e_x / nx
    nz = np.linalg.norm(e_z)
    if nz <= 1e-9 or abs(ex @ e_z) / nz >= 1.0 - 1e-9:
        raise DegenerateFrameError("e_z is zero or parallel to e_x")
    ez = e_z - (ex @ e_z) * ex
    ez = ez / np.linalg.norm(ez)
    R = np.empty((3, 3))
    R[:, 0] = ex
    R[:, 1] = np.cross(ez, ex)
    R[:, 2] = ez
    return R


def gram_schmidt_rotation_batch(e_x, e_z):
    """Row-wise :func:`gram_schmidt_rotation` for ``(n, 3)`` inputs, no checks."""
    ex = e_x / np.linalg.norm(e_x, axis=1, keepdims=True)
    ez = e_z - np.sum(ex * e_z, axis=1, keepdims=True) * ex
    ez = ez / np.linalg.norm(ez, axis=1, keepdims=True)
    return np.stack([ex, np.cross(ez, ex), ez], axis=2)


def is_rotation(R, tol=1e-10):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(
        np.max(np.abs(R.T @ R - np.eye(3))) <= tol and abs(np.linalg.det(R) - 1.0) <= tol
    )


def check_rotation(R, name="R"):
    """Returns ``R`` as an array or raises if it is not a proper rotation."""
    R = _finite(R, name)
    if not is_rotation(R, tol=1e-8):
        raise InvalidArgumentError(f"{name} is not an orthonormal right-handed 3x3 matrix")
    return R


def check_unit(v, name="v", tol=1e-9):
    v = _finite(v, name)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > tol:
        raise InvalidArgumentError(f"{name} must be a unit 3-vector")
    return v


def random_rotation(rng):
    """Haar-uniform rotation from a numpy Generator."""
    q = rng.standard_normal(4)
    return quat_to_matrix(q / np.linalg.norm(q))


def quat_to_matrix(q):
    """Unit quaternion (w, x, y, z) to rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_to_matrix_batch(q):
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    R = np.empty((q.shape[0], 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def matrix_to_quat(R):
    """Rotation matrix to unit quaternion (w, x, y, z) with w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    return q if q[0] >= 0 else -q
