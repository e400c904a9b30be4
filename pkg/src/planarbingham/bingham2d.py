"""Bingham distribution on the unit sphere S^2.

Density: p(v) = exp(v^T A v) / C(lam), with A = D diag(lam) D^T.  Adding a
constant to every eigenvalue leaves p unchanged, so analyzed distributions
are stored with lam_1 <= lam_2 <= lam_3 = 0.

The normalizing constant C(lam) = int_{S^2} exp(sum_k lam_k c_k^2) dS is
evaluated by a complex contour integral along Re(s) = shift, truncated
with an erfc taper and summed by the trapezoid rule:

    C = e^shift h sqrt(pi) sum_{n=-N-1}^{N} w(|nh|) F(nh) e^{i n h}
    F(t) = prod_k (shift - lam_k + i t)^(-1/2)

Derivatives in lam reuse the same sum with dF/dlam (and d2F/dlam2).
"""
import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import erfc

from . import kernels
from .errors import ConfigurationError, DegenerateAxisError, InvalidArgumentError, SamplingError
from .mat3 import check_unit, eig_sym3, eig_sym3_batch, triu_pack, triu_unpack
from .special import erfinv

LAMBDA_GAP_FLOOR = 1e-8
MAX_PROPOSALS_PER_POINT = 10**6


def make_rng(seed):
    """Counter-based generator (Philox) from an int or SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# Quadrature configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureConfig:
    """Parameters of the normalizing-constant series.

    ``d = d_frac * shift`` is the strip half-width; ``shift`` and the node
    spacing ``h`` follow from (r, omega_d, N, N_min).
    """

    r: float = 2.5
    omega_d: float = 0.5
    N: int = 200
    N_min: int = 15
    d_frac: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 2.0):
            raise ConfigurationError(f"r must be >= 2, got {self.r}")
        if not (1.0 / self.r <= self.omega_d <= 1.0):
            raise ConfigurationError(f"omega_d must lie in [1/r, 1], got {self.omega_d}")
        if int(self.N_min) != self.N_min or self.N_min < 1:
            raise ConfigurationError(f"N_min must be a positive integer, got {self.N_min}")
        if int(self.N) != self.N or self.N < self.N_min:
            raise ConfigurationError(f"N must be an integer >= N_min, got {self.N}")
        if not 0.0 < self.d_frac < 1.0:
            raise ConfigurationError(f"d_frac must lie in (0, 1), got {self.d_frac}")

    @property
    def shift(self):
        return self.N_min * math.pi / (self.r**2 * (1.0 + self.r) * self.omega_d)

    @property
    def d(self):
        return self.d_frac * self.shift

    @property
    def h(self):
        return math.sqrt(2.0 * math.pi * self.d * (1.0 + self.r) / (self.omega_d * self.N))

    @cached_property
    def nodes(self):
        """(t, complex weights w(|t|) e^{it}, prefactor)."""
        h = self.h
        p1 = math.sqrt(self.N * h / self.omega_d)
        p2 = math.sqrt(self.omega_d * self.N * h / 4.0)
        t = np.arange(-self.N - 1, self.N + 1) * h
        w = 0.5 * erfc(np.abs(t) / p1 - p2)
        wexp = w * np.exp(1j * t)
        scale = math.exp(self.shift) * h * math.sqrt(math.pi)
        return t, wexp, scale

    @cached_property
    def folded_nodes(self):
        """Same sum folded onto n >= 0 (plus the lone n = -N-1 node).

        For real lam the n and -n terms are complex conjugates, so their
        real parts add; only the real part of the sum is ever used.
        """
        t, wexp, scale = self.nodes
        zero = self.N + 1
        keep = np.concatenate([[0], np.arange(zero, t.size)])
        mult = np.where(keep > zero, 2.0, 1.0)
        return t[keep].copy(), wexp[keep] * mult, scale


DEFAULT_QUAD = QuadratureConfig()


# ---------------------------------------------------------------------------
# Normalizing constant
# ---------------------------------------------------------------------------


class SeriesResult(NamedTuple):
    C: np.ndarray
    dC: np.ndarray
    d2C: np.ndarray


def norm_const_series(lam, cfg=DEFAULT_QUAD):
    """C, dC/dlam and d2C/dlam2 for a batch ``(n, 3)`` of eigenvalue triples.

    Rows must satisfy max(lam) <= 0 (use shifted eigenvalues); the series
    is only valid while every ``shift - lam_k`` has positive real part.
    """
    lam = np.ascontiguousarray(np.atleast_2d(np.asarray(lam, dtype=np.float64)))
    if lam.shape[-1] != 3 or not np.all(np.isfinite(lam)):
        raise InvalidArgumentError("lam must be finite with trailing length 3")
    if np.any(lam > 0.0):
        raise InvalidArgumentError("lam must be shifted so that max(lam) <= 0")
    t, wexp, scale = cfg.folded_nodes
    return SeriesResult(*kernels.bingham_series(lam, cfg.shift, t, wexp, scale))


def _as_lam(lam):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (3,):
        raise InvalidArgumentError(f"lam must have 3 entries, got shape {lam.shape}")
    return lam


def norm_const(lam, cfg=DEFAULT_QUAD):
    """Normalizing constant C(lam) of the Bingham density on S^2."""
    return float(norm_const_series(_as_lam(lam)[None], cfg).C[0])


def norm_const_grad(lam, cfg=DEFAULT_QUAD):
    """dC/dlam_k for k = 1..3."""
    return norm_const_series(_as_lam(lam)[None], cfg).dC[0]


def log_norm_const(lam, cfg=DEFAULT_QUAD):
    """ln C for arbitrary (unshifted) eigenvalues, via C(lam + c) = e^c C(lam)."""
    lam = _as_lam(lam)
    top = float(np.max(lam))
    return math.log(norm_const(lam - top, cfg)) + top


# ---------------------------------------------------------------------------
# The distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bingham2D:
    """Analyzed distribution: parameter ``A``, frame ``D`` and shifted ``lam``."""

    A: np.ndarray
    D: np.ndarray
    lam: np.ndarray
    logC: float

    @property
    def A_shifted(self):
        return self.D @ np.diag(self.lam) @ self.D.T

    def to_json(self):
        return {
            "A": triu_pack(self.A).tolist(),
            "frame": self.D.reshape(-1).tolist(),
            "lambda": self.lam.tolist(),
            "logC": self.logC,
        }

    @classmethod
    def from_json(cls, obj, cfg=DEFAULT_QUAD):
        """Rebuilds a distribution from its JSON object; only ``A`` is trusted."""
        if not isinstance(obj, dict):
            raise InvalidArgumentError("distribution JSON must be an object")
        if "A" not in obj:
            raise InvalidArgumentError("distribution JSON is missing field 'A'")
        a = obj["A"]
        if (
            not isinstance(a, list)
            or len(a) != 6
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in a)
        ):
            raise InvalidArgumentError("field 'A' must be a list of 6 numbers")
        for key, size in (("frame", 9), ("lambda", 3)):
            if key in obj and (not isinstance(obj[key], list) or len(obj[key]) != size):
                raise InvalidArgumentError(f"field '{key}' must be a list of {size} numbers")
        if "logC" in obj and not isinstance(obj["logC"], (int, float)):
            raise InvalidArgumentError("field 'logC' must be a number")
        try:
            A = triu_unpack(np.array(a, dtype=np.float64))
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"field 'A': {exc}") from None
        return analyze(A, cfg)


def analyze(A, cfg=DEFAULT_QUAD):
    """Eigendecomposes ``A``, shifts lam so lam_3 = 0 and caches ln C."""
    A = np.asarray(A, dtype=np.float64)
    lam, D = eig_sym3(A)
    lam = lam - lam[2]
    lam[2] = 0.0
    logC = math.log(norm_const(lam, cfg))
    return Bingham2D(A=A.copy(), D=D, lam=lam, logC=logC)


def log_pdf(dist, v):
    v = check_unit(v, "v")
    return float(v @ dist.A_shifted @ v) - dist.logC


def log_pdf_many(dist, V):
    """Unchecked ``log_pdf`` over rows of ``V``."""
    c = np.asarray(V) @ dist.D
    return (c * c) @ dist.lam - dist.logC


def mode(dist):
    """Unit vector maximizing the density: the eigenvector of lam_3 (sign is arbitrary)."""
    return dist.D[:, 2].copy()


def confidence(dist):
    """Sum of eigenvalue gaps to the top eigenvalue, (l3 - l2) + (l3 - l1)."""
    lam = dist.lam
    return float((lam[2] - lam[1]) + (lam[2] - lam[0]))


# ---------------------------------------------------------------------------
# Negative log-likelihood
# ---------------------------------------------------------------------------


class NLLResult(NamedTuple):
    value: float
    grad: np.ndarray
    fallback: bool


def nll(A, v_gt, cfg=DEFAULT_QUAD):
    """-v^T A v + ln C(lam(A)); invariant under A -> A + cI."""
    A = np.asarray(A, dtype=np.float64)
    v = check_unit(v_gt, "v_gt")
    lam, _ = eig_sym3(A)
    return float(-(v @ A @ v) + log_norm_const(lam, cfg))


def _nll_fd_grad(A, v, cfg, step=1e-5):
    G = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            E = np.zeros((3, 3))
            E[i, j] = E[j, i] = 1.0 if i == j else 0.5
            fp = nll(A + step * E, v, cfg)
            fm = nll(A - step * E, v, cfg)
            G[i, j] = G[j, i] = (fp - fm) / (2.0 * step)
    return G


def nll_and_grad(A, v_gt, cfg=DEFAULT_QUAD):
    """Loss and dL/dA = -v v^T + D diag(dlnC/dlam) D^T.

    When two eigenvalues are closer than ``LAMBDA_GAP_FLOOR`` the gradient
    comes from central differences instead (``fallback`` is set).
    """
    A = np.asarray(A, dtype=np.float64)
    v = check_unit(v_gt, "v_gt")
    lam, D = eig_sym3(A)
    top = lam[2]
    ser = norm_const_series((lam - top)[None], cfg)
    C, dC = ser.C[0], ser.dC[0]
    value = float(-(v @ A @ v) + math.log(C) + top)
    if np.min(np.diff(lam)) <= LAMBDA_GAP_FLOOR:
        return NLLResult(value, _nll_fd_grad(A, v, cfg), True)
    G = -np.outer(v, v) + (D * (dC / C)) @ D.T
    G = 0.5 * (G + G.T)
    return NLLResult(value, G, False)


def nll_grad_A(A, v_gt, cfg=DEFAULT_QUAD):
    return nll_and_grad(A, v_gt, cfg).grad


def nll_and_grad_batch(A, V, cfg=DEFAULT_QUAD):
    """Vectorized loss and spectral gradient for ``(n, 3, 3)`` / ``(n, 3)``.

    Used on the training path; no degenerate-gap fallback (the spectral
    formula stays finite there because dlnC/dlam is symmetric).
    """
    lam, D = eig_sym3_batch(A)
    top = lam[:, 2:3]
    ser = norm_const_series(lam - top, cfg)
    quad = np.einsum("ni,nij,nj->n", V, A, V)
    value = -quad + np.log(ser.C) + top[:, 0]
    g = ser.dC / ser.C[:, None]
    G = -V[:, :, None] * V[:, None, :] + np.einsum("nik,nk,njk->nij", D, g, D)
    G = 0.5 * (G + np.swapaxes(G, 1, 2))
    return value, G


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass
class SampleSet:
    """Unit vectors (rows of ``points``) plus the frame used to analyze them."""

    points: np.ndarray
    frame: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        norms = np.linalg.norm(self.points, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-9):
            raise InvalidArgumentError("every sample must be a unit vector")
        if self.frame is not None:
            self.frame = np.asarray(self.frame, dtype=np.float64).reshape(3, 3)

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "z"])
        for p in self.points:
            writer.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))])

    @classmethod
    def from_csv(cls, fh, frame=None, renormalize_tol=1e-6):
        """Reads ``x,y,z`` rows; values within ``renormalize_tol`` of unit norm are renormalized."""
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y", "z"]:
            raise InvalidArgumentError("sample CSV must start with header 'x,y,z'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InvalidArgumentError(f"sample CSV line {lineno}: expected 3 columns")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise InvalidArgumentError(f"sample CSV line {lineno}: non-numeric value") from None
        pts = np.array(rows, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("sample CSV contains non-finite values")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > renormalize_tol):
            raise InvalidArgumentError("sample CSV rows must be unit vectors")
        return cls(pts / norms[:, None], frame)


def _acg_b(Lam, tol=1e-12):
    """Root b in (0, 3] of sum_k 1/(b + 2 Lam_k) = 1."""

    def g(b):
        return np.sum(1.0 / (b + 2.0 * Lam)) - 1.0

    lo, hi = 0.0, 3.0
    if g(hi) >= 0.0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample(dist, n, seed=0):
    """Draws ``n`` i.i.d. points by rejection from an angular central Gaussian.

    With Lam = -lam >= 0 the target is exp(-c^T diag(Lam) c) in frame
    coordinates c = D^T x.  Proposals are normalized Gaussians with
    precision I + 2 diag(Lam)/b, accepted against the envelope
    exp(-(3-b)/2) (3/b)^{3/2} (c^T Omega c)^{-3/2}.
    """
    n = int(n)
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    rng = make_rng(seed)
    Lam = -np.asarray(dist.lam, dtype=np.float64)
    Lam = np.maximum(Lam, 0.0)
    b = _acg_b(Lam)
    omega = 1.0 + 2.0 * Lam / b
    sd = 1.0 / np.sqrt(omega)
    log_env = -(3.0 - b) / 2.0 + 1.5 * math.log(3.0 / b)
    out = np.empty((n, 3))
    filled = 0
    proposed = 0
    batch = max(1024, int(1.3 * n))
    while filled < n:
        g = rng.standard_normal((batch, 3)) * sd
        c = g / np.linalg.norm(g, axis=1, keepdims=True)
        c2 = c * c
        log_target = -(c2 @ Lam)
        log_ratio = log_target - log_env + 1.5 * np.log(c2 @ omega)
        u = rng.random(batch)
        acc = c[np.log(u) < log_ratio]
        take = min(acc.shape[0], n - filled)
        out[filled : filled + take] = acc[:take]
        filled += take
        proposed += batch
        if proposed > MAX_PROPOSALS_PER_POINT * n:
            raise SamplingError("rejection sampler exceeded its proposal budget")
        rate = max(filled / proposed, 1e-3)
        batch = max(1024, int(1.2 * (n - filled) / rate))
    pts = out @ dist.D.T
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return SampleSet(pts, dist.D.copy())


# ---------------------------------------------------------------------------
# Percentiles of the slab sets {x : |c_i| <= sin(theta/2)}
# ---------------------------------------------------------------------------


def _axis(i, allowed=(1, 2)):
    if i not in allowed:
        raise InvalidArgumentError(f"axis index must be one of {allowed}, got {i}")
    return i - 1


def percentile_theta_approx(lam, i, p):
    """Gaussian asymptotic 2 erfinv(p) / sqrt(lam_3 - lam_i), in radians.

    ``i`` is 1-based; ``lam`` is sorted ascending.
    """
    lam = _as_lam(lam)
    k = _axis(i)
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"p must lie in (0, 1), got {p}")
    gap = lam[2] - lam[k]
    if gap <= 0.0:
        raise DegenerateAxisError(f"lam_3 - lam_{i} = {gap} leaves axis {i} unconcentrated")
    return 2.0 * erfinv(p) / math.sqrt(gap)


def percentile_theta_empirical(samples, i, p):
    """Smallest theta whose slab |c_i| <= sin(theta/2) holds a fraction p of the samples."""
    if samples.frame is None:
        raise InvalidArgumentError("samples carry no frame")
    k = _axis(i, (1, 2, 3))
    if not 0.0 < p <= 1.0:
        raise InvalidArgumentError(f"p must lie in (0, 1], got {p}")
    if len(samples) < 100:
        raise InvalidArgumentError("need at least 100 samples")
    if p == 1.0:
        return math.pi
    c = np.abs(samples.points @ samples.frame[:, k])
    q = float(np.quantile(c, p))
    return 2.0 * math.asin(min(q, 1.0))
