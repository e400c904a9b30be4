"""Reference computations that share no code with the library's series."""
import math

import numpy as np
from scipy import integrate, special


def bessel_quadrature_C(lam):
    """C(lam) from the 1-D integral over the polar coordinate z of the third axis.

    Integrating the azimuth analytically gives
    2 pi exp(l3 z^2 + (1 - z^2) max(l1, l2)) I0((1 - z^2) |l1 - l2| / 2).
    """
    l1, l2, l3 = (float(x) for x in lam)
    hi, half = max(l1, l2), abs(l1 - l2) / 2.0

    def f(z):
        s = 1.0 - z * z
        return 2.0 * math.pi * math.exp(l3 * z * z + s * hi) * special.i0e(s * half)

    pts = [-0.999, -0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99, 0.999]
    val, _ = integrate.quad(f, -1.0, 1.0, points=pts, epsabs=0.0, epsrel=1e-13, limit=1000)
    return val


def axial_closed_form_C(l, l3=0.0):
    """C(l, l, l3) for l < l3 via Dawson's integral: 4 pi e^{l3} D(sqrt(a)) / sqrt(a), a = l3 - l."""
    a = l3 - l
    if a == 0.0:
        return 4.0 * math.pi * math.exp(l3)
    r = math.sqrt(a)
    return 4.0 * math.pi * math.exp(l3) * special.dawsn(r) / r


def stratified_mc_C(lam, n_z=4000, n_phi=2500, rng=None):
    """Jittered-grid Monte Carlo estimate of C from n_z * n_phi points.

    z = cos(polar) is uniform on [-1, 1] for the uniform measure on S^2, so
    one uniform draw per (z, phi) cell is an unbiased sample.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    l1, l2, l3 = (float(x) for x in lam)
    total = 0.0
    rows = 200
    for lo in range(0, n_z, rows):
        k = min(rows, n_z - lo)
        z = -1.0 + 2.0 * (np.arange(lo, lo + k)[:, None] + rng.random((k, n_phi))) / n_z
        phi = 2.0 * math.pi * (np.arange(n_phi)[None, :] + rng.random((k, n_phi))) / n_phi
        s = 1.0 - z * z
        c = np.cos(phi)
        f = l3 * z * z + s * (l1 * c * c + l2 * (1.0 - c * c))
        total += np.exp(f).sum()
    return 4.0 * math.pi * total / (n_z * n_phi)


def uniform_mc_C(lam, n, rng):
    """Plain Monte Carlo estimate (mean of exp(v^T diag(lam) v) times 4 pi)."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return 4.0 * math.pi * float(np.mean(np.exp((v * v) @ np.asarray(lam, dtype=np.float64))))


def mode_axis_cdf(lam, grid=400001):
    """(t, CDF(t)) for t = v . (mode axis) under the Bingham with lam_3 = 0."""
    l1, l2, _ = (float(x) for x in lam)
    hi, half = max(l1, l2), abs(l1 - l2) / 2.0
    # cluster nodes near +-1 where concentrated densities live
    u = np.linspace(-1.0, 1.0, grid)
    t = np.sin(0.5 * math.pi * u)
    s = 1.0 - t * t
    log_p = s * hi + np.log(special.i0e(s * half))
    p = np.exp(log_p - log_p.max())
    cdf = integrate.cumulative_trapezoid(p, t, initial=0.0)
    return t, cdf / cdf[-1]


def chi_square_mode_axis(t_samples, lam, bins=50):
    """Chi-square statistic and p-value of mode-axis cosines against the exact marginal."""
    from scipy import stats

    t, cdf = mode_axis_cdf(lam)
    probs = np.full(bins, 1.0 / bins)
    edges = np.interp(np.linspace(0.0, 1.0, bins + 1), cdf, t)
    edges[0], edges[-1] = -1.0, 1.0
    counts, _ = np.histogram(t_samples, bins=edges)
    expected = probs * t_samples.size
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    return chi2, float(stats.chi2.sf(chi2, bins - 1))


def central_difference(f, x, h):
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e.flat[k] = h
        g.flat[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g
