"""Explicit local hidden-variable model of the single-photon homodyne statistics.

The model is a convex mixture of submodels indexed by events:

* Larsson-like submodels for indices with ``k > l`` and ``r > s``.  They share
  a uniform phase ``lam`` in ``[0, 2 pi)`` and a fair coin ``x``.  For ``x = 0``
  Alice answers with the stochastic response ``R`` and Bob with the
  deterministic response ``Q``.  For ``x = 1`` the forms are exchanged and
  every phase is mirrored (``theta -> -theta``, ``lam -> -lam``), which keeps
  the ``sin(theta1 - theta2)`` orientation of the correlations.  Exchanging the
  forms alone would produce ``sin(theta2 - theta1)`` in that branch and
  cancel the interference term.
* Trivial submodels that emit their index with certainty.  Balanced events
  without a silent party get weight ``p(n)``.  Events where one party sees no
  photons get the left-over mass ``delta(n)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import quantum
from .errors import InvalidInput, ModelInvalid, QuadratureError
from .events import Event, OscillatorStrength, Settings, as_strength
from .special import bessel_i0, poisson_tail_bound

LARSSON = "larsson"
TRIVIAL = "trivial"
VACUUM = (0, 0)

#: probability a Larsson submodel assigns to each of its four one-sided-vacuum events
FLAT_VACUUM_PROBABILITY = 0.25 - 1.0 / (2.0 * math.pi)

DEFAULT_CUTOFF = 20
CERTIFIED = "certified"
EXACT = "exact"


def heaviside(u: float) -> float:
    """Step function with ``H(0) = 1/2``."""
    if u > 0.0:
        return 1.0
    if u < 0.0:
        return 0.0
    return 0.5


def _as_event(n) -> Event:
    return n if isinstance(n, Event) else Event.of(n)


def _larsson_index(n) -> Event:
    n = _as_event(n)
    if not n.is_larsson_index():
        raise InvalidInput(f"{tuple(n)} is not a Larsson-like index (needs k > l and r > s)")
    return n


def _side_pair(n: Event, side: str) -> tuple[int, int]:
    if side == "A":
        return n.alice
    if side == "B":
        return n.bob
    raise InvalidInput(f"side must be 'A' or 'B', got {side!r}")


def _allowed(n: Event, side: str, vacuum: bool = True) -> tuple:
    c, d = _side_pair(n, side)
    out = ((c, d), (d, c))
    return out + (VACUUM,) if vacuum else out


# ---------------------------------------------------------------------------
# local responses


def response_R(n, outcome, theta: float, lam: float, side: str = "A") -> float:
    """Stochastic local response of a Larsson-like submodel.

    Non-vacuum outcome ``(c, d)``::

        (1 - V)/pi + V |sin(theta - lam)| H((c - d) sin(theta - lam))

    and the vacuum ``(0, 0)`` takes the remaining probability.
    """
    n = _larsson_index(n)
    outcome = tuple(outcome)
    allowed = _allowed(n, side)
    if outcome not in allowed:
        raise InvalidInput(f"outcome {outcome} not in {allowed} for submodel {tuple(n)}")
    v = quantum.visibility(n)
    s = math.sin(theta - lam)

    def nonvac(c, d):
        return (1.0 - v) / math.pi + v * abs(s) * heaviside((c - d) * s)

    if outcome == VACUUM:
        return 1.0 - sum(nonvac(c, d) for c, d in allowed[:2])
    return nonvac(*outcome)


def response_Q(n, outcome, theta: float, lam: float, side: str = "B") -> float:
    """Deterministic local response ``H((c - d) cos(theta - lam))``; never vacuum."""
    n = _larsson_index(n)
    outcome = tuple(outcome)
    if outcome == VACUUM:
        raise InvalidInput("the Q response never outputs the vacuum")
    allowed = _allowed(n, side, vacuum=False)
    if outcome not in allowed:
        raise InvalidInput(f"outcome {outcome} not in {allowed} for submodel {tuple(n)}")
    c, d = outcome
    return heaviside((c - d) * math.cos(theta - lam))


def local_response(n, outcome, party: str, x: int, theta: float, lam: float) -> float:
    """Probability that ``party`` ('A' or 'B') registers ``outcome`` given ``(lam, x)``."""
    if x == 0:
        if party == "A":
            return response_R(n, outcome, theta, lam, side="A")
        return 0.0 if tuple(outcome) == VACUUM else response_Q(n, outcome, theta, lam, side="B")
    if x == 1:
        if party == "A":
            return 0.0 if tuple(outcome) == VACUUM else response_Q(n, outcome, -theta, -lam, side="A")
        return response_R(n, outcome, -theta, -lam, side="B")
    raise InvalidInput(f"coin must be 0 or 1, got {x}")


def submodel_outcomes(n) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """The eight (Alice, Bob) outcome pairs a Larsson-like submodel can produce."""
    n = _larsson_index(n)
    a_pairs = _allowed(n, "A", vacuum=False)
    b_pairs = _allowed(n, "B", vacuum=False)
    both = [(a, b) for a in a_pairs for b in b_pairs]
    one_silent = [(VACUUM, b) for b in b_pairs] + [(a, VACUUM) for a in a_pairs]
    return both + one_silent


def _check_pair(n: Event, outcome_a, outcome_b):
    outcome_a, outcome_b = tuple(outcome_a), tuple(outcome_b)
    if outcome_a not in _allowed(n, "A"):
        raise InvalidInput(f"Alice outcome {outcome_a} impossible in submodel {tuple(n)}")
    if outcome_b not in _allowed(n, "B"):
        raise InvalidInput(f"Bob outcome {outcome_b} impossible in submodel {tuple(n)}")
    return outcome_a, outcome_b


# ---------------------------------------------------------------------------
# joint probabilities of a Larsson-like submodel


def joint_probability_closed(n_index, outcome_a, outcome_b, settings: Settings) -> float:
    n = _larsson_index(n_index)
    outcome_a, outcome_b = _check_pair(n, outcome_a, outcome_b)
    a_vac = outcome_a == VACUUM
    b_vac = outcome_b == VACUUM
    if a_vac and b_vac:
        return 0.0
    if a_vac or b_vac:
        return FLAT_VACUUM_PROBABILITY
    sign = math.copysign(1.0, (outcome_a[0] - outcome_a[1]) * (outcome_b[0] - outcome_b[1]))
    return (1.0 + quantum.visibility(n) * sign * math.sin(settings.theta12)) / (2.0 * math.pi)


def _breakpoints(settings: Settings) -> list[float]:
    """Phases in ``[0, 2 pi]`` where some response switches branch."""
    t1, t2 = settings.theta1, settings.theta2
    raw = [t1, t1 + math.pi, t1 + math.pi / 2, t1 - math.pi / 2, t2, t2 + math.pi, t2 + math.pi / 2, t2 - math.pi / 2]
    two_pi = 2.0 * math.pi
    pts = sorted({p % two_pi for p in raw} | {0.0, two_pi})
    return pts


def joint_probability_quadrature(
    n_index, outcome_a, outcome_b, settings: Settings, tol: float = 1e-9
) -> float:
    """Average of the product of local responses over ``lam`` and ``x``.

    The integrand is smooth between the branch switches of the responses, so
    each piece is handed to adaptive Gauss-Kronrod separately.
    """
    from scipy.integrate import quad

    n = _larsson_index(n_index)
    outcome_a, outcome_b = _check_pair(n, outcome_a, outcome_b)
    t1, t2 = settings.theta1, settings.theta2

    def integrand(lam):
        return sum(
            local_response(n, outcome_a, "A", x, t1, lam) * local_response(n, outcome_b, "B", x, t2, lam)
            for x in (0, 1)
        )

    pts = _breakpoints(settings)
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo < 1e-15:
            continue
        # evaluate strictly inside the piece so H(0) conventions never enter
        val, e = quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
        err += e
    if err / (4.0 * math.pi) > tol:
        raise QuadratureError(f"quadrature error estimate {err:.2e} above tolerance {tol:.1e}")
    return total / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# mixture weights


def larsson_weight(alpha, n) -> float:
    """Weight ``2 pi B(alpha, n)`` that makes a Larsson-like submodel match ``p(n)``."""
    n = _larsson_index(n)
    return 2.0 * math.pi * quantum.b_coefficient(alpha, n)


def _vacuum_side(n0) -> tuple[int, int]:
    """Return the non-silent pair of a one-sided-vacuum event with unequal counts."""
    n0 = _as_event(n0)
    if n0.r == 0 and n0.s == 0 and n0.k != n0.l:
        return n0.k, n0.l
    if n0.k == 0 and n0.l == 0 and n0.r != n0.s:
        return n0.r, n0.s
    raise InvalidInput(f"{tuple(n0)} is not of the form (k,l,0,0) with k != l or (0,0,r,s) with r != s")


def _delta_prefactor(alpha_sq: float, c: int, d: int) -> float:
    m = c + d
    return math.exp(
        -2.0 * alpha_sq
        - (m + 3) * math.log(2.0)
        + (m - 1) * math.log(alpha_sq)
        - math.lgamma(c + 1)
        - math.lgamma(d + 1)
    )


def delta_bracket(alpha_sq: float, diff: int, strict: bool = False) -> float:
    """Sign-carrying factor of ``delta`` for ``|k - l| = diff``.

    ``-(pi-2) e^a (a + d^2) + (pi-2) I0(a) d^2 + 4 d^2`` with ``a = alpha^2``.
    ``strict=True`` replaces ``I0(a)`` by its lower bound 1.
    """
    a = float(alpha_sq)
    d2 = float(diff) ** 2
    i0 = 1.0 if strict else bessel_i0(a)[0]
    return -(math.pi - 2.0) * math.exp(a) * (a + d2) + (math.pi - 2.0) * i0 * d2 + 4.0 * d2


def delta(alpha, n0, method: str = "bessel", cutoff: int | None = None) -> float:
    """Mass left for the trivial submodel of a one-sided-vacuum event.

    ``p(n0) - (pi/2 - 1) * sum_{c' > d'} B(alpha, (k, l, c', d'))``; negative
    values mean the mixture cannot be completed.  ``method="bessel"`` sums the
    series in closed form; ``method="sum"`` adds terms explicitly up to a total
    photon number of ``cutoff`` (default 60).
    """
    alpha = as_strength(alpha)
    alpha.require_positive()
    c, d = _vacuum_side(n0)
    if method == "bessel":
        return _delta_prefactor(alpha.alpha_sq, c, d) * delta_bracket(alpha.alpha_sq, c - d)
    if method == "sum":
        n_max = 60 if cutoff is None else int(cutoff)
        side_total = c + d
        terms = []
        for cp in range(0, n_max - side_total + 1):
            for dp in range(0, min(cp, n_max - side_total - cp + 1)):
                terms.append(quantum.b_coefficient(alpha, (c, d, cp, dp)))
        p0 = quantum.b_coefficient(alpha, (c, d, 0, 0))
        return p0 - (math.pi / 2.0 - 1.0) * math.fsum(terms)
    raise InvalidInput(f"unknown delta method {method!r}")


def delta_lower_bound(alpha, n0) -> float:
    """``delta`` with ``I0`` replaced by 1; never exceeds the exact value."""
    alpha = as_strength(alpha)
    alpha.require_positive()
    c, d = _vacuum_side(n0)
    return _delta_prefactor(alpha.alpha_sq, c, d) * delta_bracket(alpha.alpha_sq, c - d, strict=True)


# ---------------------------------------------------------------------------
# full model


@dataclass(frozen=True)
class Submodel:
    kind: str
    index: Event
    weight: float

    def __post_init__(self):
        if self.kind == LARSSON:
            if not self.index.is_larsson_index():
                raise InvalidInput(f"Larsson submodel needs k > l and r > s, got {tuple(self.index)}")
        elif self.kind == TRIVIAL:
            if not self.index.is_balanced():
                raise InvalidInput(f"trivial submodel needs k == l or r == s, got {tuple(self.index)}")
        else:
            raise InvalidInput(f"unknown submodel kind {self.kind!r}")
        if not self.weight >= 0.0:
            raise InvalidInput(f"submodel weight must be >= 0, got {self.weight}")

    def event_probability(self, settings: Settings, n) -> float:
        """Probability that this submodel alone emits ``n``."""
        n = _as_event(n)
        if self.kind == TRIVIAL:
            return 1.0 if n == self.index else 0.0
        for a, b in submodel_outcomes(self.index):
            if a + b == tuple(n):
                return joint_probability_closed(self.index, a, b, settings)
        return 0.0


@dataclass(frozen=True)
class FullModel:
    alpha: OscillatorStrength
    cutoff: int
    submodels: tuple[Submodel, ...] = field(repr=False)
    weight_tail: float
    validity: str = CERTIFIED

    @property
    def alpha_sq(self) -> float:
        return self.alpha.alpha_sq

    def weight_sum(self) -> float:
        return math.fsum(s.weight for s in self.submodels)

    @cached_property
    def _lookup(self) -> dict[tuple[str, Event], float]:
        return {(s.kind, s.index): s.weight for s in self.submodels}

    @cached_property
    def vacuum_feeders(self) -> dict[Event, tuple[Event, ...]]:
        """Reverse index: one-sided-vacuum event -> Larsson indices feeding it.

        A Larsson index ``(k, l, r, s)`` feeds ``(k,l,0,0)``, ``(l,k,0,0)``,
        ``(0,0,r,s)`` and ``(0,0,s,r)`` with probability 1/4 - 1/(2 pi) each.
        """
        feeders: dict[Event, list[Event]] = {}
        for s in self.submodels:
            if s.kind != LARSSON:
                continue
            k, l, r, q = s.index
            for ev in (Event(k, l, 0, 0), Event(l, k, 0, 0), Event(0, 0, r, q), Event(0, 0, q, r)):
                feeders.setdefault(ev, []).append(s.index)
        return {ev: tuple(v) for ev, v in feeders.items()}

    def weight_of(self, kind: str, index) -> float:
        return self._lookup.get((kind, _as_event(index)), 0.0)

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "twclhv.full_model",
            "version": 1,
            "alpha": self.alpha.alpha,
            "alpha_sq": self.alpha_sq,
            "cutoff": self.cutoff,
            "validity": self.validity,
            "weight_tail": self.weight_tail,
            "weight_sum": self.weight_sum(),
            "submodels": [
                {"kind": s.kind, "index": list(s.index), "weight": s.weight} for s in self.submodels
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "FullModel":
        if data.get("format") != "twclhv.full_model":
            raise InvalidInput("not a serialised full model")
        subs = tuple(Submodel(d["kind"], Event.of(d["index"]), float(d["weight"])) for d in data["submodels"])
        return cls(
            alpha=OscillatorStrength(float(data["alpha"]), float(data["alpha_sq"])),
            cutoff=int(data["cutoff"]),
            submodels=subs,
            weight_tail=float(data["weight_tail"]),
            validity=data.get("validity", CERTIFIED),
        )

    @classmethod
    def from_json(cls, text: str) -> "FullModel":
        return cls.from_dict(json.loads(text))


def _vacuum_events(cutoff: int) -> Iterable[Event]:
    # Alice-side first so a failure is reported as (k, l, 0, 0) when both sides fail
    for m in range(1, cutoff + 1):
        for k in range(m, -1, -1):
            if 2 * k != m:
                yield Event(k, m - k, 0, 0)
    for m in range(1, cutoff + 1):
        for r in range(m, -1, -1):
            if 2 * r != m:
                yield Event(0, 0, r, m - r)


def build_full_model(
    alpha, cutoff: int = DEFAULT_CUTOFF, validity: str = CERTIFIED, rel_eps: float = 1e-12
) -> FullModel:
    """Assemble every submodel with index total ``<= cutoff``.

    ``validity`` selects the positivity test applied to the vacuum-event
    weights before the mixture is accepted:

    ``"certified"``
        the closed-form sufficient condition (``I0`` bounded below by 1).  It
        fails first at ``|k - l| = 1`` once ``alpha^2`` exceeds
        ``W((2e + e pi)/(pi - 2)) - 1 ~ 0.8759``.
    ``"exact"``
        the weights themselves; these stay non-negative up to ``alpha^2 ~ 0.9065``.

    Raises :class:`ModelInvalid` carrying the first offending event.
    """
    alpha = as_strength(alpha)
    alpha.require_positive()
    cutoff = int(cutoff)
    if cutoff < 1:
        raise InvalidInput(f"cutoff must be >= 1, got {cutoff}")
    if validity not in (CERTIFIED, EXACT):
        raise InvalidInput(f"validity must be {CERTIFIED!r} or {EXACT!r}, got {validity!r}")
    a2 = alpha.alpha_sq

    vac_weights: dict[Event, float] = {}
    for ev in _vacuum_events(cutoff):
        w = delta(alpha, ev)
        p0 = quantum.b_coefficient(alpha, ev)
        test = delta_lower_bound(alpha, ev) if validity == CERTIFIED else w
        if test < -rel_eps * p0:
            c, d = _vacuum_side(ev)
            raise ModelInvalid(
                f"negative vacuum weight at event {tuple(ev)} (|k-l| = {abs(c - d)}) for alpha^2 = {a2:.6g}: "
                f"{'certified bound' if validity == CERTIFIED else 'delta'} = {test:.3e}; "
                f"the model is valid only for alpha^2 below ~0.8759 (W((2e+e*pi)/(pi-2)) - 1)",
                event=ev,
                alpha_sq=a2,
                value=test,
            )
        vac_weights[ev] = max(w, 0.0)

    events = quantum.event_array(cutoff)
    b, _ = quantum.split_terms(alpha, events)
    subs: list[Submodel] = []
    for row, bval in zip(events, b):
        ev = Event(*map(int, row))
        if ev.is_larsson_index():
            subs.append(Submodel(LARSSON, ev, 2.0 * math.pi * float(bval)))
        elif ev.is_balanced():
            weight = vac_weights.get(ev, 0.0) if ev.is_vacuum_sided() else float(bval)
            if weight > 0.0:
                subs.append(Submodel(TRIVIAL, ev, weight))

    # Omitted submodels have index total > cutoff; their weights are at most
    # p(n) on balanced events and 2 pi B(n) on a quarter of the rest, so at
    # most pi/2 times the Poisson(2 alpha^2) tail.
    tail = 0.5 * math.pi * poisson_tail_bound(2.0 * a2, cutoff)
    return FullModel(alpha=alpha, cutoff=cutoff, submodels=tuple(subs), weight_tail=tail, validity=validity)


# ---------------------------------------------------------------------------
# model predictions


def lhv_event_probability(model: FullModel, settings: Settings, n) -> float:
    """Probability that the mixture emits ``n``, summed over contributing submodels."""
    n = _as_event(n)
    terms = [model.weight_of(TRIVIAL, n)]
    k, l, r, s = n
    if k != l and r != s:
        idx = Event(max(k, l), min(k, l), max(r, s), min(r, s))
        w = model.weight_of(LARSSON, idx)
        if w:
            terms.append(w * joint_probability_closed(idx, (k, l), (r, s), settings))
    for idx in model.vacuum_feeders.get(n, ()):
        terms.append(model.weight_of(LARSSON, idx) * FLAT_VACUUM_PROBABILITY)
    return math.fsum(terms)


def lhv_event_probability_bruteforce(model: FullModel, settings: Settings, n) -> float:
    """Same as :func:`lhv_event_probability` but scanning every submodel."""
    return math.fsum(s.weight * s.event_probability(settings, n) for s in model.submodels)


def lhv_distribution(model: FullModel, settings: Settings, events: Sequence | None = None) -> dict[Event, float]:
    if events is None:
        events = (Event(*map(int, row)) for row in quantum.event_array(model.cutoff))
    return {ev: lhv_event_probability(model, settings, ev) for ev in map(_as_event, events)}


def max_deviation(model: FullModel, settings_list: Iterable[Settings], max_total: int) -> tuple[float, Event, Settings]:
    """Largest ``|LHV - quantum|`` over events of total ``<= max_total``."""
    events = quantum.event_array(max_total)
    worst = (-1.0, None, None)
    for st in settings_list:
        q = quantum.probabilities(model.alpha, st, events)
        for row, qv in zip(events, q):
            ev = Event(*map(int, row))
            err = abs(lhv_event_probability(model, st, ev) - float(qv))
            if err > worst[0]:
                worst = (err, ev, st)
    return worst
