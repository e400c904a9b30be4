"""Maximum-likelihood fit of a Bingham distribution to unit vectors.

The scatter matrix S = mean(x x^T) is sufficient.  Its eigenvectors fix the
frame; the eigenvalues (lam_1, lam_2) with lam_3 = 0 then minimize

    f(lam) = -sum_i lam_i s_i + ln C(lam)

whose gradient dlnC/dlam_i - s_i vanishes when the model moments E[c_i^2]
match the sample moments s_i.
"""
import math
from dataclasses import dataclass

import numpy as np

from .bingham2d import DEFAULT_QUAD, Bingham2D, SampleSet, norm_const_series
from .errors import InvalidArgumentError
from .mat3 import eig_sym3


@dataclass(frozen=True)
class FitOptions:
    max_iters: int = 500
    step: float = 1.0
    tol: float = 1e-7
    lambda_floor: float = -1e4

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if not self.step > 0:
            raise InvalidArgumentError("step must be > 0")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be > 0")
        if not self.lambda_floor < 0:
            raise InvalidArgumentError("lambda_floor must be negative")


@dataclass
class FitReport:
    dist: Bingham2D
    iters: int
    final_grad_norm: float
    nll_per_sample: float
    converged: bool
    history: list

    def to_json(self):
        out = self.dist.to_json()
        out.update(
            {
                "iters": self.iters,
                "final_grad_norm": self.final_grad_norm,
                "nll_per_sample": self.nll_per_sample,
                "converged": self.converged,
            }
        )
        return out


def scatter_matrix(samples):
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 3:
        raise InvalidArgumentError("scatter_matrix needs at least 3 samples of dimension 3")
    S = pts.T @ pts / pts.shape[0]
    return 0.5 * (S + S.T)


def _objective(lam12, s, cfg):
    lam = np.array([[lam12[0], lam12[1], 0.0]])
    ser = norm_const_series(lam, cfg)
    C = ser.C[0]
    m = ser.dC[0] / C
    # Hessian of ln C: E[c_i^2 c_j^2] - E[c_i^2] E[c_j^2]
    H = ser.d2C[0] / C - np.outer(m, m)
    f = -(lam12[0] * s[0] + lam12[1] * s[1]) + math.log(C)
    return f, m[:2] - s[:2], H[:2, :2]


def _initial_guess(s, floor):
    # concentrated limit: E[c_i^2] ~ 1 / (2 (lam_3 - lam_i))
    lam = np.array([-0.5 / max(si, 1e-12) + 1.5 for si in s[:2]])
    lam = np.clip(lam, floor, 0.0)
    return np.sort(lam)


def fit_mle(samples, opts=FitOptions(), cfg=DEFAULT_QUAD):
    """Bingham MLE: frame from the scatter matrix, eigenvalues by descent.

    Steps follow the gradient scaled by the inverse diagonal of the
    Hessian of ln C, with Armijo backtracking (factor 0.5, c = 1e-4), and
    stay inside [lambda_floor, 0].
    """
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples)
    if pts.shape[0] < 10:
        raise InvalidArgumentError("fit_mle needs at least 10 samples")
    S = scatter_matrix(pts)
    s, D = eig_sym3(S)
    lam = _initial_guess(s, opts.lambda_floor)
    f, g, H = _objective(lam, s, cfg)
    history = [f]
    it = 0
    while it < opts.max_iters and np.max(np.abs(g)) > opts.tol:
        it += 1
        scale = 1.0 / np.maximum(np.diag(H), 1e-12)
        direction = -scale * g
        step = opts.step
        accepted = False
        for _ in range(60):
            trial = np.clip(lam + step * direction, opts.lambda_floor, 0.0)
            ft, gt, Ht = _objective(trial, s, cfg)
            if ft <= f + 1e-4 * (g @ (trial - lam)):
                accepted = True
                break
            step *= 0.5
        if not accepted or np.array_equal(trial, lam):
            break
        lam, f, g, H = trial, ft, gt, Ht
        history.append(f)
    gnorm = float(np.max(np.abs(g)))
    full = np.array([lam[0], lam[1], 0.0])
    order = np.argsort(full, kind="stable")
    full = full[order]
    D = D[:, order]
    if np.linalg.det(D) < 0:
        D[:, 2] = -D[:, 2]
    logC = f + lam[0] * s[0] + lam[1] * s[1]
    A = D @ np.diag(full) @ D.T
    dist = Bingham2D(A=A, D=D, lam=full, logC=logC)
    return FitReport(
        dist=dist,
        iters=it,
        final_grad_norm=gnorm,
        nll_per_sample=float(f),
        converged=gnorm <= opts.tol,
        history=history,
    )
