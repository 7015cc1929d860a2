"""Special functions and tail bounds used by the model: Lambert W, I0, Poisson tails."""

from __future__ import annotations

import math

_EPS = 2.220446049250313e-16
_INV_E = math.exp(-1.0)


def lambertw(z: float, tol: float = 4 * _EPS, maxiter: int = 64) -> float:
    """Principal branch W0 of the Lambert W function for real ``z >= -1/e``.

    Solves ``w * exp(w) = z`` with Halley's iteration.  The seed is
    ``ln z - ln ln z`` for large ``z``, ``log1p(z)`` in the middle range, and
    the branch-point expansion ``-1 + p - p**2/3`` (``p = sqrt(2(e z + 1))``)
    near ``-1/e``.
    """
    z = float(z)
    if math.isnan(z) or z < -_INV_E * (1 + 4 * _EPS):
        raise ValueError(f"W0 is real only for z >= -1/e, got {z}")
    if z == 0.0:
        return 0.0
    if z == math.inf:
        return math.inf
    if z <= -_INV_E:
        return -1.0

    if z > math.e:
        lz = math.log(z)
        w = lz - math.log(lz)
    elif z > -0.25:
        w = math.log1p(z)
    else:
        p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
        w = -1.0 + p - p * p / 3.0

    for _ in range(maxiter):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= tol * (1.0 + abs(w)):
            return w
    # only reachable at the branch point, where Halley's step degenerates
    return w


def bessel_i0(x: float, rel_tol: float = 1e-18) -> tuple[float, float]:
    """Modified Bessel function I0 by its power series.

    Returns ``(value, remainder_bound)``.  Summation stops once a term falls
    below ``rel_tol`` times the partial sum; the remainder is then bounded by
    a geometric series on the term ratio ``(x/2)**2 / (m+1)**2``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"I0 needs a finite argument, got {x}")
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    m = 0
    while True:
        m += 1
        term *= q / (m * m)
        total += term
        if term <= rel_tol * total:
            ratio = q / ((m + 1) * (m + 1))
            if ratio < 1.0:
                next_term = term * ratio
                return total, next_term / (1.0 - ratio)
        if m > 100000:
            raise ArithmeticError("I0 series failed to converge")


def poisson_tail_bound(lam: float, n: int) -> float:
    """Chernoff bound on ``P(X >= n)`` for ``X ~ Poisson(lam)``.

    ``exp(-lam) * (e lam / n)**n`` when ``n > lam``, else the trivial bound 1.
    """
    if n <= 0 or n <= lam:
        return 1.0
    if lam == 0.0:
        return 0.0
    log_bound = -lam + n * (1.0 + math.log(lam) - math.log(n))
    return min(1.0, math.exp(log_bound))


def poisson_moment_tail_bound(lam: float, n: int, power: int) -> float:
    """Upper bound on ``sum_{t >= n} P(X = t) * (t + 1)**power``, X ~ Poisson(lam).

    Successive terms shrink at least by ``lam/(n+1) * ((n+2)/(n+1))**power``
    past ``t = n``, so the tail is dominated by a geometric series.
    Returns ``inf`` when that ratio is not below one.
    """
    if n < 0:
        n = 0
    ratio = lam / (n + 1) * ((n + 2) / (n + 1)) ** power
    if ratio >= 1.0:
        return math.inf
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    log_first = -lam + n * math.log(lam) - math.lgamma(n + 1) + power * math.log(n + 1)
    return math.exp(log_first) / (1.0 - ratio)
