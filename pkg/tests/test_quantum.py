import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from conftest import strength
from twclhv import quantum
from twclhv.errors import InvalidInput, TruncationError, UndefinedVisibility
from twclhv.events import Event, OscillatorStrength, Settings

counts = st.integers(min_value=0, max_value=12)
events = st.builds(Event, counts, counts, counts, counts)
angles = st.floats(min_value=-10.0, max_value=10.0)
alpha_sqs = st.floats(min_value=0.01, max_value=1.5)


def test_vacuum_event_has_zero_probability():
    for th in (0.0, 1.0, -2.0):
        assert quantum.event_probability(strength(0.25), Settings(th, 0.0), (0, 0, 0, 0)) == 0.0


def test_single_click_probability():
    # exp(-1/2)/4 at alpha^2 = 1/4, frozen from 30-digit arithmetic
    expected = 0.151632664928158355900949883748
    for th in (0.0, 0.4, math.pi / 2):
        p = quantum.event_probability(strength(0.25), Settings(th, 0.0), (1, 0, 0, 0))
        assert p == pytest.approx(expected, rel=1e-15)


def test_quarter_turn_doubles_coincidence():
    a = strength(0.25)
    p0 = quantum.event_probability(a, Settings(0.0, 0.0), (1, 0, 1, 0))
    p90 = quantum.event_probability(a, Settings(math.pi / 2, 0.0), (1, 0, 1, 0))
    assert p90 == pytest.approx(2 * p0, rel=1e-14)


def test_zero_alpha_rejected():
    with pytest.raises(InvalidInput):
        quantum.event_probability(OscillatorStrength(0.0), Settings(0, 0), (1, 0, 0, 0))
    with pytest.raises(InvalidInput):
        quantum.b_coefficient(OscillatorStrength(0.0), (0, 0, 0, 0))


def test_non_finite_settings_rejected():
    with pytest.raises(InvalidInput):
        Settings(math.nan, 0.0)
    with pytest.raises(InvalidInput):
        Settings(0.0, math.inf)


def test_negative_counts_rejected():
    with pytest.raises(InvalidInput):
        Event.of((1, -1, 0, 0))


@pytest.mark.parametrize(
    "n, expected",
    [((1, 0, 1, 0), 1.0), ((2, 0, 1, 0), 0.8), ((0, 1, 1, 0), -1.0), ((3, 3, 2, 0), 0.0)],
)
def test_visibility_examples(n, expected):
    assert quantum.visibility(n) == pytest.approx(expected, abs=1e-15)


def test_visibility_undefined_for_doubly_balanced():
    with pytest.raises(UndefinedVisibility):
        quantum.visibility((2, 2, 1, 1))


def test_b_coefficient_examples():
    a = strength(0.25)
    assert quantum.b_coefficient(a, (0, 0, 0, 0)) == 0.0
    assert quantum.b_coefficient(a, (1, 0, 0, 0)) == pytest.approx(math.exp(-0.5) / 4, rel=1e-15)
    for a2 in (0.1, 0.5, 0.9):
        assert quantum.b_coefficient(strength(a2), (1, 0, 1, 0)) == quantum.b_coefficient(strength(a2), (0, 1, 1, 0))


@given(events)
def test_visibility_bound(n):
    if n.k == n.l and n.r == n.s:
        return
    v = quantum.visibility(n)
    assert abs(v) <= 1.0
    assert (abs(abs(v) - 1.0) < 1e-15) == (abs(n.k - n.l) == abs(n.r - n.s))


@given(alpha_sqs, angles, events)
def test_factored_form(a2, th, n):
    if n.k == n.l or n.r == n.s:
        return
    a = strength(a2)
    p = quantum.event_probability(a, Settings(th, 0.0), n)
    b = quantum.b_coefficient(a, n)
    assert p == pytest.approx(b * (1 + quantum.visibility(n) * math.sin(th)), rel=1e-12, abs=1e-300)


@given(alpha_sqs, events)
def test_balanced_events_ignore_phase(a2, n):
    if not n.is_balanced():
        return
    a = strength(a2)
    ref = quantum.event_probability(a, Settings(0.0, 0.0), n)
    for th in np.linspace(-math.pi, math.pi, 9):
        assert quantum.event_probability(a, Settings(float(th), 0.3), n) == ref


@given(alpha_sqs, angles, events)
def test_swap_flips_only_the_interference_sign(a2, th, n):
    a = strength(a2)
    p = quantum.event_probability(a, Settings(th, 0.0), n)
    q = quantum.event_probability(a, Settings(-th, 0.0), Event(n.l, n.k, n.r, n.s))
    assert p == pytest.approx(q, rel=1e-12, abs=1e-300)


@given(alpha_sqs, angles, events)
def test_probability_in_unit_interval(a2, th, n):
    p = quantum.event_probability(strength(a2), Settings(th, 0.0), n)
    assert 0.0 <= p <= 1.0


@pytest.mark.parametrize("a2", [0.1, 0.3, 0.5, 0.8])
@pytest.mark.parametrize("th", [0.0, math.pi / 4, math.pi / 2])
def test_normalization(a2, th):
    table = quantum.distribution(strength(a2), Settings(th, 0.0), 30)
    assert table.total() >= 1 - 1e-10
    assert table.total() <= 1 + 1e-13


@pytest.mark.parametrize("a2", [0.1, 0.87, 1.3])
def test_mass_at_each_total_is_shifted_poisson(a2):
    table = quantum.distribution(strength(a2), Settings(0.9, 0.0), 14, tol=1.0)
    by_total = np.zeros(15)
    for ev, p in table:
        by_total[ev.total()] += p
    expected = np.r_[0.0, stats.poisson.pmf(np.arange(14), 2 * a2)]
    np.testing.assert_allclose(by_total, expected, rtol=1e-12, atol=1e-300)


def test_distribution_examples():
    a = strength(0.25)
    table = quantum.distribution(a, Settings(0.0, 0.0), 20)
    assert 1 - 1e-12 <= table.total() <= 1 + 1e-15
    assert table.total() + table.tail_bound >= 1 - 1e-15
    assert all(0.0 <= p <= 1.0 for _, p in table)
    assert len(table) == math.comb(24, 4)
    shifted = quantum.distribution(a, Settings(math.pi, 0.0), 20)
    assert dict(table.entries) == pytest.approx(dict(shifted.entries), abs=1e-17)


def test_distribution_cutoff_zero_is_uncertifiable():
    with pytest.raises(TruncationError) as info:
        quantum.distribution(strength(0.25), Settings(0.0, 0.0), 0)
    assert info.value.achievable_bound == 1.0


def test_distribution_reports_achievable_bound():
    with pytest.raises(TruncationError) as info:
        quantum.distribution(strength(0.25), Settings(0.0, 0.0), 5, tol=1e-12)
    assert 1e-12 < info.value.achievable_bound < 1e-3


def test_correlation_vanishes_without_phase_difference():
    for a2 in (0.05, 0.3, 0.9):
        c = quantum.correlation(strength(a2), Settings(0.4, 0.4), 25)
        assert abs(c.value) < 1e-15


def test_correlation_regression_anchor():
    # 30-digit brute-force summation at N_max = 30; also equals 1/(1 + alpha^2)
    c = quantum.correlation(strength(0.1), Settings(math.pi / 2, 0.0), 30)
    assert c.value == pytest.approx(0.909090909090909090909090909091, rel=1e-14)
    assert c.value > 1 / math.sqrt(2)
    assert c.lower <= c.value <= c.upper
    assert c.upper - c.lower < 1e-30


@pytest.mark.parametrize("a2", [0.05, 0.2, 0.4142, 0.7, 1.0])
def test_correlation_matches_hand_derived_form(a2):
    for th in np.linspace(-3, 3, 7):
        c = quantum.correlation(strength(a2), Settings(float(th), 0.0), 30)
        assert c.value == pytest.approx(math.sin(th) / (1 + a2), abs=1e-13)


@given(angles, angles)
def test_correlation_symmetries(t1, t2):
    a = strength(0.3)
    e = quantum.correlation(a, Settings(t1, t2), 20).value
    assert quantum.correlation(a, Settings(t2, t1), 20).value == pytest.approx(-e, abs=1e-12)
    assert quantum.correlation(a, Settings(t2 + math.pi, t1), 20).value == pytest.approx(e, abs=1e-12)
    assert quantum.correlation(a, Settings(t1 + math.pi, t2), 20).value == pytest.approx(-e, abs=1e-12)


def test_correlation_interval_widens_at_small_cutoff():
    c = quantum.correlation(strength(0.8), Settings(1.0, 0.0), 8, tol=1.0)
    assert c.upper - c.lower > 0
    exact = math.sin(1.0) / 1.8
    assert c.lower <= exact <= c.upper


def test_correlation_uncertifiable_truncation():
    with pytest.raises(TruncationError):
        quantum.correlation(strength(0.8), Settings(1.0, 0.0), 3)
