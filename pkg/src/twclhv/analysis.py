"""CHSH evaluation, violation-window scans, normalisation audit and validity thresholds."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import lhv, quantum
from .errors import InvalidInput, ModelInvalid
from .events import Event, OscillatorStrength, Settings, as_strength
from .special import lambertw

DEFAULT_CUTOFF = 20
GRID_POINTS = 64


@dataclass(frozen=True)
class ChshSettings:
    theta1: float
    theta1_prime: float
    theta2: float
    theta2_prime: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in asdict(self).values()):
            raise InvalidInput(f"CHSH settings must be finite: {self}")

    def pairs(self) -> list[tuple[int, Settings]]:
        """The four (sign, settings) terms of the CHSH combination."""
        return [
            (+1, Settings(self.theta1, self.theta2)),
            (+1, Settings(self.theta1_prime, self.theta2)),
            (+1, Settings(self.theta1, self.theta2_prime)),
            (-1, Settings(self.theta1_prime, self.theta2_prime)),
        ]


def chsh_value(alpha, s: ChshSettings, cutoff: int = DEFAULT_CUTOFF) -> float:
    """Signed ``E(t1,t2) + E(t1',t2) + E(t1,t2') - E(t1',t2')``; compare ``|S|`` to 2."""
    return math.fsum(sign * quantum.correlation(alpha, st, cutoff).value for sign, st in s.pairs())


def optimize_chsh(alpha, cutoff: int = DEFAULT_CUTOFF, grid: int = GRID_POINTS) -> tuple[float, ChshSettings]:
    """Maximise ``|S|`` over all settings.

    Only phase differences matter, so ``theta2`` is pinned to 0 and the
    remaining three phases are scanned on a ``grid**3`` mesh, then polished
    with Nelder-Mead.  Returns the signed value at the optimum and its settings.
    """
    from scipy.optimize import minimize

    kern = quantum.correlation_kernel(alpha, cutoff)

    def s_of(t1, t1p, t2p):
        return kern.value(t1) + kern.value(t1p) + kern.value(t1 - t2p) - kern.value(t1p - t2p)

    ax = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    t1, t1p, t2p = np.meshgrid(ax, ax, ax, indexing="ij")
    vals = np.abs(s_of(t1, t1p, t2p))
    i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x0 = np.array([ax[i[0]], ax[i[1]], ax[i[2]]])
    res = minimize(lambda x: -abs(s_of(*x)), x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    best = res.x if -res.fun >= vals[i] else x0
    if s_of(*best) < 0:
        best = -best  # E is odd in the phase difference, so this flips the sign of S
    best = np.mod(best, 2.0 * math.pi)
    settings = ChshSettings(float(best[0]), float(best[1]), 0.0, float(best[2]))
    return chsh_value(alpha, settings, cutoff), settings


# ---------------------------------------------------------------------------
# violation window


@dataclass(frozen=True)
class ScanRow:
    alpha_sq: float
    chsh_value: float
    visibility: float
    lhv_max_error: float
    model_valid: bool

    @property
    def violates(self) -> bool:
        return abs(self.chsh_value) > 2.0


@dataclass(frozen=True)
class ScanResult:
    rows: tuple[ScanRow, ...]
    cutoff: int

    columns = ("alpha_sq", "chsh_value", "visibility", "lhv_max_error", "model_valid", "violation")

    def flags(self) -> list[bool]:
        return [r.violates for r in self.rows]

    def is_monotone(self) -> bool:
        """Violations form a prefix of the (sorted) grid."""
        f = self.flags()
        return all(not (b and not a) for a, b in zip(f, f[1:]))

    def boundary(self) -> tuple[float | None, float | None]:
        """``(last alpha^2 with |S| > 2, first alpha^2 without)``."""
        last_true = first_false = None
        for r in self.rows:
            if r.violates:
                last_true = r.alpha_sq
            elif first_false is None:
                first_false = r.alpha_sq
        return last_true, first_false

    def table(self) -> list[list]:
        return [
            [r.alpha_sq, r.chsh_value, r.visibility, r.lhv_max_error, r.model_valid, r.violates] for r in self.rows
        ]

    def to_dict(self) -> dict:
        last, first = self.boundary()
        return {
            "cutoff": self.cutoff,
            "rows": [dict(zip(self.columns, row)) for row in self.table()],
            "last_violation": last,
            "first_non_violation": first,
            "monotone": self.is_monotone(),
        }


LHV_CHECK_SETTINGS = tuple(Settings.from_difference(t) for t in (0.0, math.pi / 4, math.pi / 2, -math.pi / 3))


def scan_point(alpha_sq: float, cutoff: int = DEFAULT_CUTOFF, check_total: int = 6) -> ScanRow:
    alpha = OscillatorStrength.from_alpha_sq(alpha_sq)
    value, _ = optimize_chsh(alpha, cutoff)
    vis = abs(quantum.correlation(alpha, Settings(math.pi / 2, 0.0), cutoff).value)
    try:
        model = lhv.build_full_model(alpha, cutoff)
    except ModelInvalid:
        return ScanRow(alpha_sq, value, vis, math.nan, False)
    err = lhv.max_deviation(model, LHV_CHECK_SETTINGS, check_total)[0] if check_total >= 0 else math.nan
    return ScanRow(alpha_sq, value, vis, err, True)


def violation_window(
    cutoff: int = DEFAULT_CUTOFF, grid=None, check_total: int = 6, workers: int = 1
) -> ScanResult:
    """Optimised CHSH value (and LHV reproduction error) along an ``alpha^2`` grid."""
    if grid is None:
        grid = np.round(np.arange(1, 31) * 0.02, 10)
    grid = sorted(float(g) for g in grid)
    if not grid or grid[0] <= 0.0 or grid[-1] > 1.0:
        raise InvalidInput("alpha^2 grid must lie in (0, 1]")
    args = [(g, cutoff, check_total) for g in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(scan_point, *zip(*args)))
    else:
        rows = [scan_point(*a) for a in args]
    return ScanResult(tuple(rows), cutoff)


# ---------------------------------------------------------------------------
# normalisation audit

ALGEBRAIC_FACTOR = 4.0 * (math.pi / 2.0 - 1.0)


@dataclass
class Identity:
    name: str
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


@dataclass
class AuditReport:
    alpha_sq: float
    cutoff: int
    tol: float
    tail_bound: float
    identities: list[Identity] = field(default_factory=list)
    factor_residual: float = 0.0
    bessel_total_residual: float = 0.0

    @property
    def passed(self) -> bool:
        return self.factor_residual <= self.tol and all(i.residual <= self.tol for i in self.identities)

    def failures(self) -> list[str]:
        out = [
            f"{i.name}: lhs={i.lhs!r} rhs={i.rhs!r} residual={i.residual:.3e} > {self.tol:.1e}"
            for i in self.identities
            if i.residual > self.tol
        ]
        if self.factor_residual > self.tol:
            out.append(f"4(pi/2-1) vs 2pi-4: residual {self.factor_residual:.3e}")
        return out

    def table(self) -> list[list]:
        return [[i.name, i.lhs, i.rhs, i.residual, i.residual <= self.tol] for i in self.identities]

    def to_dict(self) -> dict:
        return {
            "alpha_sq": self.alpha_sq,
            "cutoff": self.cutoff,
            "tol": self.tol,
            "tail_bound": self.tail_bound,
            "factor_residual": self.factor_residual,
            "bessel_total_residual": self.bessel_total_residual,
            "passed": self.passed,
            "identities": [
                {"name": i.name, "lhs": i.lhs, "rhs": i.rhs, "residual": i.residual, "ok": i.residual <= self.tol}
                for i in self.identities
            ],
        }


def normalization_audit(alpha, cutoff: int = DEFAULT_CUTOFF, tol: float = 1e-9) -> AuditReport:
    """Check, under one common truncation, that the submodel weights sum to one.

    1. ``sum_O delta = sum_O B - (2 pi - 4) sum_Ntilde B`` with ``delta``
       built from the same truncated sums;
    2. ``sum_Ntilde B = 1/4 sum_{k != l, r != s} B``;
    3. the grand total of all weights is 1.
    """
    alpha = as_strength(alpha)
    alpha.require_positive()
    events = quantum.event_array(cutoff)
    b, _ = quantum.split_terms(alpha, events)
    k, l, r, s = events.T
    larsson = (k > l) & (r > s)
    balanced = (k == l) | (r == s)
    vacuum = balanced & (((k == 0) & (l == 0)) | ((r == 0) & (s == 0)))
    unbalanced = (k != l) & (r != s)

    # truncated sum_{c' > d'} B(k, l, c', d') keyed by (k, l), and the mirror for Bob
    alice_feed: dict[tuple[int, int], list[float]] = {}
    bob_feed: dict[tuple[int, int], list[float]] = {}
    for row, bv in zip(events[(r > s)], b[(r > s)]):
        alice_feed.setdefault((int(row[0]), int(row[1])), []).append(float(bv))
    for row, bv in zip(events[(k > l)], b[(k > l)]):
        bob_feed.setdefault((int(row[2]), int(row[3])), []).append(float(bv))

    half = math.pi / 2.0 - 1.0
    deltas = []
    bessel = []
    for row, bv in zip(events[vacuum], b[vacuum]):
        ev = Event(*map(int, row))
        if ev.r == 0 and ev.s == 0 and ev.k != ev.l:
            feed = alice_feed.get((ev.k, ev.l), [])
        elif ev.k == 0 and ev.l == 0 and ev.r != ev.s:
            feed = bob_feed.get((ev.r, ev.s), [])
        else:
            continue  # p = 0 and nothing feeds it
        deltas.append(float(bv) - half * math.fsum(feed))
        bessel.append(lhv.delta(alpha, ev))

    sum_o_delta = math.fsum(deltas)
    sum_o_b = math.fsum(b[vacuum])
    sum_nt_b = math.fsum(b[larsson])
    sum_unb_b = math.fsum(b[unbalanced])
    sum_n_not_o = math.fsum(b[balanced & ~vacuum])
    total = math.fsum([sum_n_not_o, 2.0 * math.pi * sum_nt_b, sum_o_delta])
    total_bessel = math.fsum([sum_n_not_o, 2.0 * math.pi * sum_nt_b, math.fsum(bessel)])

    report = AuditReport(
        alpha_sq=alpha.alpha_sq,
        cutoff=cutoff,
        tol=tol,
        tail_bound=quantum.truncation_tail_bound(alpha, cutoff),
        factor_residual=abs(ALGEBRAIC_FACTOR - (2.0 * math.pi - 4.0)),
        bessel_total_residual=abs(total_bessel - 1.0),
    )
    report.identities = [
        Identity("vacuum_deltas", sum_o_delta, sum_o_b - (2.0 * math.pi - 4.0) * sum_nt_b),
        Identity("larsson_quarter", sum_nt_b, 0.25 * sum_unb_b),
        Identity("grand_total", total, 1.0),
    ]
    return report


# ---------------------------------------------------------------------------
# validity threshold


def strict_condition_lhs(alpha_sq: float) -> float:
    """``((pi-2)(-e^a) + pi + 2) - (pi-2) a e^a`` at ``|k-l| = 1``; non-negative inside the valid range."""
    a = float(alpha_sq)
    ea = math.exp(a)
    return ((math.pi - 2.0) * (-ea) + math.pi + 2.0) - (math.pi - 2.0) * a * ea


def _bisect(f, lo: float, hi: float, xtol: float = 1e-15) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ArithmeticError(f"root not bracketed on [{lo}, {hi}]")
    while hi - lo > xtol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_alpha_sq(method: str = "closed_form") -> float:
    """Largest ``alpha^2`` for which the strict positivity condition holds (~0.8707)."""
    if method == "closed_form":
        z = (2.0 * math.e + math.e * math.pi) / (math.pi - 2.0)
        return lambertw(z) - 1.0
    if method == "root_find":
        return _bisect(strict_condition_lhs, 0.5, 1.0)
    raise InvalidInput(f"unknown threshold method {method!r}")


def exact_threshold_alpha_sq(diff: int = 1, lo: float = 0.5, hi: float = 3.0) -> float:
    """Where the exact vacuum weight for ``|k - l| = diff`` changes sign."""
    return _bisect(lambda a: lhv.delta_bracket(a, diff), lo, hi)


@dataclass(frozen=True)
class PositivityRow:
    difference: int
    first_negative_exact: float | None
    first_negative_strict: float | None


def delta_positivity_map(alpha_grid, kl_differences) -> list[PositivityRow]:
    """Smallest grid ``alpha^2`` at which the vacuum weight turns negative, per ``|k - l|``.

    The sign depends only on ``|k - l|``.  ``exact`` keeps the Bessel term,
    ``strict`` bounds it below by 1.
    """
    grid = sorted(float(a) for a in alpha_grid)
    rows = []
    for d in kl_differences:
        d = int(d)
        if d < 1:
            raise InvalidInput(f"|k - l| must be >= 1, got {d}")
        exact = next((a for a in grid if lhv.delta_bracket(a, d) < 0.0), None)
        strict = next((a for a in grid if lhv.delta_bracket(a, d, strict=True) < 0.0), None)
        rows.append(PositivityRow(d, exact, strict))
    return rows
