import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from twclhv.special import bessel_i0, lambertw, poisson_moment_tail_bound, poisson_tail_bound


@pytest.mark.parametrize("z", [-0.3678794, -0.3, -0.1, 0.0, 1e-8, 0.5, 1.0, math.e, 12.24, 1e3, 1e12])
def test_lambertw_matches_scipy(z):
    assert lambertw(z) == pytest.approx(special.lambertw(z).real, rel=1e-14, abs=1e-12)


@given(st.floats(min_value=-0.36, max_value=1e8))
def test_lambertw_solves_defining_equation(z):
    w = lambertw(z)
    assert w >= -1.0
    assert w * math.exp(w) == pytest.approx(z, rel=1e-13, abs=1e-15)


def test_lambertw_branch_point():
    # scipy yields nan exactly at -1/e
    assert lambertw(-1 / math.e) == pytest.approx(-1.0, abs=1e-7)


def test_lambertw_rejects_below_branch_point():
    with pytest.raises(ValueError):
        lambertw(-0.4)


def _i0_integral(x):
    val, _ = integrate.quad(lambda t: math.exp(x * math.cos(t)), 0.0, math.pi, epsabs=1e-13, epsrel=1e-13)
    return val / math.pi


@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 0.87, 1.0])
def test_i0_against_integral_representation(x):
    val, rem = bessel_i0(x)
    assert abs(val - _i0_integral(x)) < 1e-12
    assert rem < 1e-15


@given(st.floats(min_value=0.0, max_value=30.0))
def test_i0_against_scipy(x):
    val, rem = bessel_i0(x)
    assert val == pytest.approx(special.i0(x), rel=1e-13)
    assert rem <= 1e-14 * val


def test_i0_is_even_and_at_least_one():
    for x in np.linspace(0, 3, 13):
        assert bessel_i0(x)[0] == bessel_i0(-x)[0] >= 1.0


@pytest.mark.parametrize("lam", [0.2, 0.6, 1.74, 2.0])
@pytest.mark.parametrize("n", [3, 6, 10, 20, 30])
def test_poisson_tail_is_an_upper_bound(lam, n):
    exact = stats.poisson.sf(n - 1, lam)
    bound = poisson_tail_bound(lam, n)
    assert bound >= exact * (1 - 1e-12)


def test_poisson_tail_trivial_cases():
    assert poisson_tail_bound(0.5, 0) == 1.0
    assert poisson_tail_bound(3.0, 2) == 1.0


@pytest.mark.parametrize("lam", [0.2, 1.74])
@pytest.mark.parametrize("n", [5, 12, 25])
@pytest.mark.parametrize("power", [0, 2])
def test_poisson_moment_tail_is_an_upper_bound(lam, n, power):
    t = np.arange(n, n + 400)
    exact = float(np.sum(stats.poisson.pmf(t, lam) * (t + 1.0) ** power))
    assert poisson_moment_tail_bound(lam, n, power) >= exact * (1 - 1e-12)


def test_poisson_moment_tail_infinite_when_ratio_too_large():
    assert poisson_moment_tail_bound(5.0, 2, 2) == math.inf
