"""Exact photodetection statistics of the single-photon homodyne setup.

For an event ``n = (k, l, r, s)`` and phase difference ``theta12``::

    p(n) = A(alpha, n) * [(k-l)**2 + (r-s)**2 + 2 (k-l)(r-s) sin(theta12)]
    A(alpha, n) = exp(-2 alpha^2) (alpha^2/2)**(k+l+r+s) / (k! l! r! s!) / (2 alpha^2)

Everything is evaluated in log space and exponentiated at the end.

Summed over all events of total photon number ``t`` the probabilities give
``Poisson(2 alpha^2)`` evaluated at ``t - 1``; the truncation tail of any
enumeration is therefore a Poisson upper tail, which is what the certified
bounds below use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DegenerateCorrelation, InvalidInput, TruncationError, UndefinedVisibility
from .events import Event, OscillatorStrength, Settings, as_strength, events_up_to
from .special import poisson_moment_tail_bound, poisson_tail_bound

DEFAULT_TAIL_TOL = 1e-6


def _positive_strength(alpha) -> OscillatorStrength:
    alpha = as_strength(alpha)
    alpha.require_positive()
    return alpha


def _as_event(n) -> Event:
    return n if isinstance(n, Event) else Event.of(n)


def log_a_coefficient(alpha, n) -> float:
    """``log A(alpha, n)``."""
    a2 = _positive_strength(alpha).alpha_sq
    n = _as_event(n)
    log_fact = sum(math.lgamma(c + 1) for c in n)
    return -2.0 * a2 + n.total() * math.log(0.5 * a2) - log_fact - math.log(2.0 * a2)


def event_probability(alpha, settings: Settings, n) -> float:
    """Probability of registering ``n`` at the four detectors."""
    n = _as_event(n)
    dkl = n.k - n.l
    drs = n.r - n.s
    bracket = dkl * dkl + drs * drs + 2.0 * dkl * drs * math.sin(settings.theta12)
    if bracket <= 0.0:
        # the bracket is >= (|k-l| - |r-s|)**2 >= 0; only rounding can push it below
        _positive_strength(alpha)
        return 0.0
    return math.exp(log_a_coefficient(alpha, n)) * bracket


def b_coefficient(alpha, n) -> float:
    """Setting-independent part ``B = A [(k-l)^2 + (r-s)^2]`` of ``p(n)``."""
    n = _as_event(n)
    base = (n.k - n.l) ** 2 + (n.r - n.s) ** 2
    if base == 0:
        _positive_strength(alpha)
        return 0.0
    return math.exp(log_a_coefficient(alpha, n)) * base


def visibility(n) -> float:
    """Amplitude of the ``sin(theta12)`` modulation: ``2(k-l)(r-s) / ((k-l)^2 + (r-s)^2)``."""
    n = _as_event(n)
    dkl = n.k - n.l
    drs = n.r - n.s
    if dkl == 0 and drs == 0:
        raise UndefinedVisibility(f"visibility undefined for {tuple(n)}: k == l and r == s")
    return 2.0 * dkl * drs / (dkl * dkl + drs * drs)


# ---------------------------------------------------------------------------
# vectorised enumeration


@lru_cache(maxsize=32)
def event_array(cutoff: int) -> np.ndarray:
    """Integer array of shape ``(M, 4)`` holding every event with total ``<= cutoff``."""
    arr = np.array(list(events_up_to(cutoff)), dtype=np.int64).reshape(-1, 4)
    arr.setflags(write=False)
    return arr


def log_a_array(alpha_sq: float, events: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    totals = events.sum(axis=1)
    return (
        -2.0 * alpha_sq
        + totals * math.log(0.5 * alpha_sq)
        - gammaln(events + 1).sum(axis=1)
        - math.log(2.0 * alpha_sq)
    )


def split_terms(alpha, events: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(B, C)`` with ``p = B + C sin(theta12)`` for each row of ``events``."""
    a2 = _positive_strength(alpha).alpha_sq
    a = np.exp(log_a_array(a2, events))
    dkl = events[:, 0] - events[:, 1]
    drs = events[:, 2] - events[:, 3]
    return a * (dkl * dkl + drs * drs), a * (2.0 * dkl * drs)


def probabilities(alpha, settings: Settings, events: np.ndarray) -> np.ndarray:
    b, c = split_terms(alpha, events)
    return np.maximum(b + c * math.sin(settings.theta12), 0.0)


def truncation_tail_bound(alpha, cutoff: int) -> float:
    """Certified bound on the probability of all events with total ``> cutoff``."""
    a2 = _positive_strength(alpha).alpha_sq
    return poisson_tail_bound(2.0 * a2, cutoff)


# ---------------------------------------------------------------------------
# truncated distribution


@dataclass(frozen=True)
class DistributionTable:
    """Quantum event probabilities over ``{n : total(n) <= cutoff}``."""

    alpha_sq: float
    settings: Settings
    cutoff: int
    tail_bound: float
    entries: Mapping[Event, float] = field(repr=False)

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def __getitem__(self, n) -> float:
        return self.entries[_as_event(n)]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())


def distribution(alpha, settings: Settings, cutoff: int, tol: float = DEFAULT_TAIL_TOL) -> DistributionTable:
    """Enumerate ``p(n)`` for all events of total ``<= cutoff``.

    Raises :class:`TruncationError` if the certified tail exceeds ``tol``.
    """
    alpha = _positive_strength(alpha)
    cutoff = int(cutoff)
    if cutoff < 0:
        raise InvalidInput(f"cutoff must be >= 0, got {cutoff}")
    tail = truncation_tail_bound(alpha, cutoff)
    if tail > tol:
        raise TruncationError(
            f"cutoff {cutoff} leaves a certified tail of {tail:.3e} > {tol:.1e} at alpha^2={alpha.alpha_sq}",
            tail,
        )
    events = event_array(cutoff)
    probs = probabilities(alpha, settings, events)
    entries = {Event(*map(int, row)): float(p) for row, p in zip(events, probs)}
    return DistributionTable(
        alpha_sq=alpha.alpha_sq,
        settings=settings,
        cutoff=cutoff,
        tail_bound=tail,
        entries=MappingProxyType(entries),
    )


# ---------------------------------------------------------------------------
# intensity correlation


@dataclass(frozen=True)
class CorrelationKernel:
    """Truncated sums giving the correlation at any phase difference.

    ``p`` is affine in ``sin(theta12)``, so numerator and denominator are too:
    ``num = num0 + num1 sin``, ``den = den0 + den1 sin``.  ``tail`` bounds the
    omitted part of either sum.
    """

    alpha_sq: float
    cutoff: int
    num0: float
    num1: float
    den0: float
    den1: float
    tail: float

    def sums(self, theta12: float) -> tuple[float, float]:
        s = math.sin(theta12)
        return self.num0 + self.num1 * s, self.den0 + self.den1 * s

    def value(self, theta12):
        s = np.sin(theta12)
        return (self.num0 + self.num1 * s) / (self.den0 + self.den1 * s)


@lru_cache(maxsize=256)
def _kernel(alpha_sq: float, cutoff: int) -> CorrelationKernel:
    alpha = OscillatorStrength.from_alpha_sq(alpha_sq)
    events = event_array(cutoff)
    b, c = split_terms(alpha, events)
    diff = (events[:, 0] - events[:, 1]) * (events[:, 2] - events[:, 3])
    summ = (events[:, 0] + events[:, 1]) * (events[:, 2] + events[:, 3])
    # |(k-l)(r-s)| <= (k+l)(r+s) <= total^2/4, and per-total mass is Poisson(2a^2) at t-1
    tail = 0.25 * poisson_moment_tail_bound(2.0 * alpha_sq, cutoff, 2)
    return CorrelationKernel(
        alpha_sq=alpha_sq,
        cutoff=cutoff,
        num0=math.fsum(b * diff),
        num1=math.fsum(c * diff),
        den0=math.fsum(b * summ),
        den1=math.fsum(c * summ),
        tail=tail,
    )


def correlation_kernel(alpha, cutoff: int) -> CorrelationKernel:
    alpha = _positive_strength(alpha)
    if cutoff < 1:
        raise InvalidInput(f"cutoff must be >= 1, got {cutoff}")
    return _kernel(alpha.alpha_sq, int(cutoff))


@dataclass(frozen=True)
class Correlation:
    value: float
    lower: float
    upper: float
    numerator: float
    denominator: float
    tail: float

    def __float__(self) -> float:
        return self.value


def correlation(alpha, settings: Settings, cutoff: int, tol: float = DEFAULT_TAIL_TOL) -> Correlation:
    """Normalised intensity correlation ``E(theta1, theta2)`` with a truncation interval.

    The interval accounts for the omitted tail separately in the numerator
    (either sign) and the denominator (non-negative).
    """
    kern = correlation_kernel(alpha, cutoff)
    num, den = kern.sums(settings.theta12)
    eps = kern.tail
    if not math.isfinite(eps) or eps > tol:
        raise TruncationError(
            f"cutoff {cutoff} cannot certify the correlation tail (bound {eps:.3e}) at alpha^2={kern.alpha_sq}",
            eps,
        )
    if den <= 0.0:
        raise DegenerateCorrelation(f"denominator {den} is not positive")
    corners = [(num + dn) / (den + dd) for dn in (-eps, eps) for dd in (0.0, eps)]
    value = num / den
    return Correlation(
        value=value,
        lower=min(corners + [value]),
        upper=max(corners + [value]),
        numerator=num,
        denominator=den,
        tail=eps,
    )
