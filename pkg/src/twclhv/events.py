"""Value types shared by the quantum and hidden-variable layers.

An event is the joint photon-count record ``(k, l, r, s)`` at the four
detectors ``(c1, d1, c2, d2)``.  Alice owns ``(k, l)``, Bob owns ``(r, s)``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .errors import InvalidInput

TWO_PI = 2.0 * math.pi


class Event(NamedTuple):
    k: int
    l: int
    r: int
    s: int

    @classmethod
    def of(cls, counts) -> "Event":
        k, l, r, s = (int(c) for c in counts)
        if min(k, l, r, s) < 0:
            raise InvalidInput(f"photon counts must be non-negative, got {(k, l, r, s)}")
        return cls(k, l, r, s)

    def total(self) -> int:
        return self.k + self.l + self.r + self.s

    @property
    def alice(self) -> tuple[int, int]:
        return (self.k, self.l)

    @property
    def bob(self) -> tuple[int, int]:
        return (self.r, self.s)

    def transposed(self) -> "Event":
        """Exchange the roles of Alice and Bob."""
        return Event(self.r, self.s, self.k, self.l)

    # event classes used by the hidden-variable construction

    def is_balanced(self) -> bool:
        """True when one party registers equal counts at both detectors."""
        return self.k == self.l or self.r == self.s

    def is_larsson_index(self) -> bool:
        return self.k > self.l and self.r > self.s

    def is_vacuum_sided(self) -> bool:
        """Balanced event in which one party sees no photons at all."""
        return (self.k == 0 and self.l == 0) or (self.r == 0 and self.s == 0)


@dataclass(frozen=True)
class Settings:
    """Local-oscillator phases in radians."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise InvalidInput(f"settings must be finite, got ({self.theta1}, {self.theta2})")

    @property
    def theta12(self) -> float:
        return self.theta1 - self.theta2

    def reduced(self) -> "Settings":
        return Settings(self.theta1 % TWO_PI, self.theta2 % TWO_PI)

    @classmethod
    def from_difference(cls, theta12: float) -> "Settings":
        return cls(float(theta12), 0.0)


@dataclass(frozen=True)
class OscillatorStrength:
    """Common amplitude ``alpha`` of both local oscillators.

    ``alpha_sq`` is stored as given when the strength is built from it, so
    configurations round-trip without a sqrt/square wobble.
    """

    alpha: float
    alpha_sq: float = field(default=None, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidInput(f"alpha must be a finite non-negative real, got {self.alpha}")
        if self.alpha_sq is None:
            object.__setattr__(self, "alpha_sq", self.alpha * self.alpha)
        elif abs(self.alpha_sq - self.alpha * self.alpha) > 4 * sys.float_info.epsilon * self.alpha_sq:
            raise InvalidInput(f"alpha_sq {self.alpha_sq} inconsistent with alpha {self.alpha}")

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float) -> "OscillatorStrength":
        if not math.isfinite(alpha_sq) or alpha_sq < 0:
            raise InvalidInput(f"alpha^2 must be a finite non-negative real, got {alpha_sq}")
        return cls(math.sqrt(alpha_sq), float(alpha_sq))

    def require_positive(self) -> None:
        if self.alpha <= 0.0:
            raise InvalidInput("alpha must be > 0: the event probabilities carry a 1/(2 alpha^2) factor")


def as_strength(alpha) -> OscillatorStrength:
    """Accept an :class:`OscillatorStrength` or a bare alpha (not alpha squared)."""
    if isinstance(alpha, OscillatorStrength):
        return alpha
    return OscillatorStrength(float(alpha))


def events_up_to(cutoff: int) -> Iterator[Event]:
    """All events with total photon number ``<= cutoff``, in lexicographic order."""
    for k in range(cutoff + 1):
        for l in range(cutoff + 1 - k):
            for r in range(cutoff + 1 - k - l):
                for s in range(cutoff + 1 - k - l - r):
                    yield Event(k, l, r, s)
