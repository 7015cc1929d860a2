"""Independent amplitude-level computation of the event probabilities.

Two routes, neither of which uses the closed-form probability:

* :func:`expansion_amplitude` expands both coherent states in Fock space,
  rewrites every input creation operator through the balanced beamsplitter
  ``c = (a + i b)/sqrt2``, ``d = (i a + b)/sqrt2`` as a polynomial in the output
  creation operators, and reads off the coefficient of the target monomial.
* :func:`amplitude_oracle` collects the four terms of the one-photon factor
  ``(-c1 + i d1 + i c2 + d2)/2`` against the binomial expansion coefficients
  ``f(j, p, k, q)``.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .errors import TruncationError
from .events import Event, Settings, as_strength

DEFAULT_EXPANSION_CUTOFF = 64

# output mode order in monomial exponents
C1, D1, C2, D2 = range(4)


def _mode_map() -> dict[str, dict[int, complex]]:
    """Input creation operators as linear forms in the output creation operators."""
    u = np.array([[1.0, 1.0j], [1.0j, 1.0]]) / math.sqrt(2.0)  # (c, d) = u @ (a, b)
    # creation operators transform with u transposed
    ut = u.T
    return {
        "a1": {C1: complex(ut[0, 0]), D1: complex(ut[0, 1])},
        "b1": {C1: complex(ut[1, 0]), D1: complex(ut[1, 1])},
        "a2": {C2: complex(ut[0, 0]), D2: complex(ut[0, 1])},
        "b2": {C2: complex(ut[1, 0]), D2: complex(ut[1, 1])},
    }


_MODES = _mode_map()


def _mul_linear(poly: dict, form: dict[int, complex]) -> dict:
    out: dict = {}
    for mono, coeff in poly.items():
        for mode, w in form.items():
            key = list(mono)
            key[mode] += 1
            key = tuple(key)
            out[key] = out.get(key, 0.0) + coeff * w
    return out


@lru_cache(maxsize=256)
def _power(mode: str, j: int) -> tuple:
    poly = {(0, 0, 0, 0): 1.0 + 0j}
    for _ in range(j):
        poly = _mul_linear(poly, _MODES[mode])
    return tuple(poly.items())


def _mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            key = tuple(a + b for a, b in zip(m1, m2))
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def _check_cutoff(n: Event, cutoff: int) -> None:
    need = max(n.k + n.l, n.r + n.s)
    if need > cutoff:
        raise TruncationError(
            f"coherent-state expansion to order {cutoff} cannot reach event {tuple(n)}", float(need)
        )


def expansion_amplitude(alpha, settings: Settings, n, cutoff: int = DEFAULT_EXPANSION_CUTOFF) -> complex:
    """``<k,l,r,s|Psi>`` by explicit Fock-space expansion."""
    alpha = as_strength(alpha)
    alpha.require_positive()
    n = n if isinstance(n, Event) else Event.of(n)
    _check_cutoff(n, cutoff)
    beta1 = alpha.alpha * cmath.exp(1j * settings.theta1)
    beta2 = alpha.alpha * cmath.exp(1j * settings.theta2)
    photon = {}
    for mode, w in ((C1, _MODES["b1"][C1]), (D1, _MODES["b1"][D1])):
        photon[mode] = photon.get(mode, 0) + 1j * w / math.sqrt(2.0)
    for mode, w in ((C2, _MODES["b2"][C2]), (D2, _MODES["b2"][D2])):
        photon[mode] = photon.get(mode, 0) + w / math.sqrt(2.0)

    target = tuple(n)
    amp = 0j
    total = n.total()
    for j in range(0, n.k + n.l + 1):
        m = total - 1 - j
        if m < 0 or m > n.r + n.s:
            continue
        left = _mul_linear(dict(_power("a1", j)), photon)
        state = _mul(left, dict(_power("a2", m)))
        coeff = state.get(target, 0j)
        if coeff == 0:
            continue
        amp += beta1**j / math.factorial(j) * beta2**m / math.factorial(m) * coeff
    amp *= math.exp(-alpha.alpha_sq)
    return amp * math.sqrt(math.prod(math.factorial(c) for c in n))


def f_coefficient(alpha, settings: Settings, j: int, p: int, k: int, q: int) -> complex:
    """Expansion coefficient of ``(c1+)^(j-p) (d1+)^p (one-photon term) (c2+)^(k-q) (d2+)^q``."""
    if p < 0 or q < 0 or p > j or k < 0 or j < 0 or q > k:
        return 0j
    alpha = as_strength(alpha)
    a = alpha.alpha
    return (
        math.exp(-alpha.alpha_sq)
        * 2.0 ** (-(j + k) / 2.0 - 1.0)
        * (a * cmath.exp(1j * settings.theta1)) ** j / math.factorial(j)
        * (a * cmath.exp(1j * settings.theta2)) ** k / math.factorial(k)
        * math.comb(j, p)
        * math.comb(k, q)
        * (1j) ** (p + q)
    )


def amplitude_oracle(alpha, settings: Settings, n, cutoff: int = DEFAULT_EXPANSION_CUTOFF) -> float:
    """``|<k,l,r,s|Psi>|^2`` from the four-term collection of ``f`` coefficients."""
    alpha = as_strength(alpha)
    alpha.require_positive()
    n = n if isinstance(n, Event) else Event.of(n)
    _check_cutoff(n, cutoff)
    k, l, r, s = n
    f = lambda j, p, kk, q: f_coefficient(alpha, settings, j, p, kk, q)  # noqa: E731
    amp = (
        -f(k + l - 1, l, r + s, s)
        + 1j * f(k + l - 1, l - 1, r + s, s)
        + 1j * f(k + l, l, r + s - 1, s)
        + f(k + l, l, r + s - 1, s - 1)
    )
    norm = math.prod(math.factorial(c) for c in n)
    return abs(amp) ** 2 * norm
