"""Inverse error function by safeguarded Newton iteration on ``math.erf``."""
import math

from .errors import InvalidArgumentError

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def erfinv(y, tol=1e-12, max_iter=200):
    """Returns x with erf(x) = y for y in (-1, 1).

    Newton steps are kept inside a shrinking bracket, falling back to
    bisection whenever a step would leave it.  Above 0.5 the residual is
    taken on erfc so the tail keeps its relative precision.
    """
    y = float(y)
    if not -1.0 < y < 1.0:
        if y == 1.0:
            return math.inf
        if y == -1.0:
            return -math.inf
        raise InvalidArgumentError(f"erfinv needs y in (-1, 1), got {y}")
    if y == 0.0:
        return 0.0
    sign = 1.0 if y > 0 else -1.0
    y = abs(y)
    if y > 0.5:
        target = 1.0 - y

        def resid(x):
            return target - math.erfc(x)

    else:

        def resid(x):
            return math.erf(x) - y

    lo, hi = 0.0, 1.0
    while resid(hi) < 0:
        lo, hi = hi, 2.0 * hi
    # small-argument start: erf(x) ~ 2x/sqrt(pi)
    x = y / _TWO_OVER_SQRT_PI if y < 0.1 else 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = resid(x)
        if fx > 0:
            hi = x
        elif fx < 0:
            lo = x
        else:
            return sign * x
        deriv = _TWO_OVER_SQRT_PI * math.exp(-x * x)
        nxt = x - fx / deriv if deriv > 0 else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * abs(nxt):
            return sign * nxt
        x = nxt
    return sign * x
