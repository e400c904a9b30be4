"""Hot numeric kernels, each in a numba flavour and a vectorized numpy flavour.

Two kernels dominate runtime during training and fitting:

* ``jacobi3``: cyclic Jacobi diagonalization of a batch of symmetric 3x3
  matrices.
* ``bingham_series``: the damped trapezoid sum that gives the Bingham
  normalizing constant on S^2 together with its first and second
  derivatives in the eigenvalues.

The public names ``jacobi3`` and ``bingham_series`` resolve to the numba
variant unless ``PLANARBINGHAM_DISABLE_NUMBA=1``.  Both variants are exported
under explicit ``*_nb`` / ``*_np`` names for tests and benchmarks.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 64

_PAIRS = ((0, 1), (0, 2), (1, 2))


# ---------------------------------------------------------------------------
# Jacobi eigenvalue iteration
# ---------------------------------------------------------------------------


@njit(cache=True)
def jacobi3_nb(mats, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Returns (diag, V, sweeps) with mats[i] = V[i] diag(diag[i]) V[i]^T.

    ``sweeps[i]`` is -1 when matrix i did not converge.
    """
    n = mats.shape[0]
    diag = np.empty((n, 3))
    vecs = np.empty((n, 3, 3))
    sweeps = np.empty(n, dtype=np.int64)
    a = np.empty((3, 3))
    v = np.empty((3, 3))
    for m in range(n):
        fro2 = 0.0
        for i in range(3):
            for j in range(3):
                a[i, j] = mats[m, i, j]
                v[i, j] = 1.0 if i == j else 0.0
                fro2 += a[i, j] * a[i, j]
        thresh = tol * math.sqrt(fro2)
        done = -1
        for sweep in range(max_sweeps + 1):
            off = math.sqrt(2.0 * (a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2))
            if off <= thresh:
                done = sweep
                break
            if sweep == max_sweeps:
                break
            for k in range(3):
                if k == 0:
                    p, q = 0, 1
                elif k == 1:
                    p, q = 0, 2
                else:
                    p, q = 1, 2
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                r = 3 - p - q
                arp = a[r, p]
                arq = a[r, q]
                a[p, p] = a[p, p] - t * apq
                a[q, q] = a[q, q] + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[r, p] = c * arp - s * arq
                a[p, r] = a[r, p]
                a[r, q] = s * arp + c * arq
                a[q, r] = a[r, q]
                for i in range(3):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
        for i in range(3):
            diag[m, i] = a[i, i]
            for j in range(3):
                vecs[m, i, j] = v[i, j]
        sweeps[m] = done
    return diag, vecs, sweeps


def jacobi3_np(mats, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Vectorized twin of :func:`jacobi3_nb`; same rotations, same order."""
    a = np.array(mats, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    thresh = tol * np.sqrt(np.einsum("nij,nij->n", a, a))
    sweeps = np.full(n, -1, dtype=np.int64)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * (a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2))
        newly = (off <= thresh) & (sweeps < 0)
        sweeps[newly] = sweep
        active = sweeps < 0
        if not active.any() or sweep == max_sweeps:
            break
        for p, q in _PAIRS:
            apq = a[:, p, q]
            rot = active & (apq != 0.0)
            if not rot.any():
                continue
            idx = np.nonzero(rot)[0]
            apq = apq[idx]
            theta = (a[idx, q, q] - a[idx, p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            safe = np.where(big, 1.0, theta)
            t = 1.0 / (np.abs(safe) + np.sqrt(safe * safe + 1.0))
            t = np.where(safe < 0.0, -t, t)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            r = 3 - p - q
            arp = a[idx, r, p]
            arq = a[idx, r, q]
            a[idx, p, p] = a[idx, p, p] - t * apq
            a[idx, q, q] = a[idx, q, q] + t * apq
            a[idx, p, q] = 0.0
            a[idx, q, p] = 0.0
            new_rp = c * arp - s * arq
            new_rq = s * arp + c * arq
            a[idx, r, p] = new_rp
            a[idx, p, r] = new_rp
            a[idx, r, q] = new_rq
            a[idx, q, r] = new_rq
            vp = v[idx, :, p].copy()
            vq = v[idx, :, q].copy()
            v[idx, :, p] = c[:, None] * vp - s[:, None] * vq
            v[idx, :, q] = s[:, None] * vp + c[:, None] * vq
    diag = np.stack([a[:, 0, 0], a[:, 1, 1], a[:, 2, 2]], axis=1)
    return diag, v, sweeps


# ---------------------------------------------------------------------------
# Normalizing-constant series
# ---------------------------------------------------------------------------


@njit(cache=True)
def bingham_series_nb(lam, shift, t, wexp, scale):
    """Series for C, dC/dlam and d2C/dlam2 over a batch of eigenvalue triples.

    ``t`` holds the nodes n*h, ``wexp`` the complex weights
    w(|t|) * exp(i t), ``shift`` the contour offset and ``scale`` the
    prefactor e^shift * h * sqrt(pi).
    """
    n = lam.shape[0]
    m = t.shape[0]
    val = np.empty(n)
    grad = np.empty((n, 3))
    hess = np.empty((n, 3, 3))
    for b in range(n):
        r0 = shift - lam[b, 0]
        r1 = shift - lam[b, 1]
        r2 = shift - lam[b, 2]
        s0 = 0j
        g0 = 0j
        g1 = 0j
        g2 = 0j
        h00 = 0j
        h11 = 0j
        h22 = 0j
        h01 = 0j
        h02 = 0j
        h12 = 0j
        for j in range(m):
            z0 = complex(r0, t[j])
            z1 = complex(r1, t[j])
            z2 = complex(r2, t[j])
            f = wexp[j] / (np.sqrt(z0) * np.sqrt(z1) * np.sqrt(z2))
            i0 = 1.0 / z0
            i1 = 1.0 / z1
            i2 = 1.0 / z2
            s0 += f
            f0 = f * i0
            f1 = f * i1
            f2 = f * i2
            g0 += f0
            g1 += f1
            g2 += f2
            h00 += f0 * i0
            h11 += f1 * i1
            h22 += f2 * i2
            h01 += f0 * i1
            h02 += f0 * i2
            h12 += f1 * i2
        val[b] = scale * s0.real
        grad[b, 0] = 0.5 * scale * g0.real
        grad[b, 1] = 0.5 * scale * g1.real
        grad[b, 2] = 0.5 * scale * g2.real
        # d2F/dlam_k dlam_l = F/(4 z_k z_l), and 3F/(4 z_k^2) on the diagonal
        hess[b, 0, 0] = 0.75 * scale * h00.real
        hess[b, 1, 1] = 0.75 * scale * h11.real
        hess[b, 2, 2] = 0.75 * scale * h22.real
        hess[b, 0, 1] = hess[b, 1, 0] = 0.25 * scale * h01.real
        hess[b, 0, 2] = hess[b, 2, 0] = 0.25 * scale * h02.real
        hess[b, 1, 2] = hess[b, 2, 1] = 0.25 * scale * h12.real
    return val, grad, hess


def bingham_series_np(lam, shift, t, wexp, scale, chunk=2048):
    """Vectorized twin of :func:`bingham_series_nb`."""
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    val = np.empty(n)
    grad = np.empty((n, 3))
    hess = np.empty((n, 3, 3))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        z = (shift - lam[lo:hi, None, :]) + 1j * t[None, :, None]
        inv = 1.0 / z
        f = wexp[None, :] / np.prod(np.sqrt(z), axis=2)
        val[lo:hi] = scale * f.sum(axis=1).real
        grad[lo:hi] = scale * 0.5 * np.einsum("bj,bjk->bk", f, inv).real
        # d2F/dlam_k dlam_l = F/(4 z_k z_l), plus F/(2 z_k^2) on the diagonal
        h = 0.25 * np.einsum("bj,bjk,bjl->bkl", f, inv, inv)
        diag = 0.5 * np.einsum("bj,bjk->bk", f, inv * inv)
        h[:, [0, 1, 2], [0, 1, 2]] += diag
        hess[lo:hi] = scale * h.real
    return val, grad, hess


if USE_NUMBA:
    jacobi3 = jacobi3_nb
    bingham_series = bingham_series_nb
else:
    jacobi3 = jacobi3_np
    bingham_series = bingham_series_np
