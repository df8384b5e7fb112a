from __future__ import annotations

import math

import numpy as np
import pytest

from weakinfo import DomainError, Utility

FAMILIES = [
    Utility.log(),
    Utility.power(0.5),
    Utility.power(-1.3),
    Utility.exponential(1.0),
    Utility.exponential(0.02),
]


def test_evaluate_pinned_values():
    assert Utility.log().evaluate(1.0) == 0.0
    assert Utility.power(0.5).evaluate(4.0) == pytest.approx(4.0, abs=1e-14)
    assert Utility.exponential(1.0).evaluate(0.0) == pytest.approx(-1.0, abs=1e-14)


def test_inverse_marginal_pinned_values():
    assert Utility.log().inverse_marginal(2.0) == pytest.approx(0.5, abs=1e-14)
    # invert U'(x) = x^(-1/2) by hand: x = y^(-2)
    assert Utility.power(0.5).inverse_marginal(2.0) == pytest.approx(0.25, abs=1e-14)
    assert Utility.exponential(1.0).inverse_marginal(1.0) == pytest.approx(0.0, abs=1e-14)


def test_conjugate_pinned_values():
    # maximize ln x - x y analytically: -ln y - 1
    assert Utility.log().conjugate(1.0) == pytest.approx(-1.0, abs=1e-14)
    # (1/g - 1) y^(g/(g-1)) at g=.5, y=1
    assert Utility.power(0.5).conjugate(1.0) == pytest.approx(1.0, abs=1e-14)
    # sup_x of -e^-x - x y at y=1 sits at x=0
    assert Utility.exponential(1.0).conjugate(1.0) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.describe())
def test_inverse_marginal_round_trip(u):
    ys = np.logspace(-6, 6, 121)
    xs = u.inverse_marginal(ys)
    back = u.marginal(xs)
    assert np.all(np.abs(back - ys) <= 1e-10 * ys)


@pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.describe())
def test_conjugate_dominates_and_is_tight(u):
    rng = np.random.default_rng(11)
    ys = np.exp(rng.uniform(-3, 3, 40))
    if u.requires_positive_wealth:
        xs = np.exp(rng.uniform(-3, 3, 40))
    else:
        xs = rng.uniform(-20, 20, 40)
    conj = u.conjugate(ys)
    for y, c in zip(ys, conj):
        vals = u.evaluate(xs) - xs * y
        assert c >= np.max(vals) - 1e-9
        x_star = u.inverse_marginal(y)
        tight = u.evaluate(x_star) - x_star * y
        assert abs(c - tight) <= 1e-10 * max(1.0, abs(c))


@pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.describe())
def test_monotonicity(u):
    xs = np.linspace(0.1, 50.0, 400) if u.requires_positive_wealth else np.linspace(-25, 25, 400)
    vals = u.evaluate(xs)
    assert np.all(np.diff(vals) > 0)
    ys = np.logspace(-4, 4, 200)
    inv = u.inverse_marginal(ys)
    assert np.all(np.diff(inv) < 0)


@pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.describe())
def test_concavity_by_finite_differences(u):
    xs = np.linspace(0.5, 40.0, 300) if u.requires_positive_wealth else np.linspace(-15, 15, 300)
    step = xs[1] - xs[0]
    vals = u.evaluate(xs)
    second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
    assert np.all(second <= 1e-12 * step)


def test_domain_errors():
    with pytest.raises(DomainError):
        Utility.log().evaluate(0.0)
    with pytest.raises(DomainError):
        Utility.power(0.5).evaluate(-1.0)
    for u in FAMILIES:
        with pytest.raises(DomainError):
            u.inverse_marginal(0.0)
        with pytest.raises(DomainError):
            u.conjugate(-2.0)
    # exponential accepts any real wealth
    assert Utility.exponential(1.0).evaluate(-3.0) == pytest.approx(-math.e**3)


def test_parameter_validation():
    with pytest.raises(ValueError):
        Utility.power(0.0)
    with pytest.raises(ValueError):
        Utility.power(1.0)
    with pytest.raises(ValueError):
        Utility.power(1.7)
    with pytest.raises(ValueError):
        Utility.exponential(0.0)
    with pytest.raises(ValueError):
        Utility(kind="quadratic")
    # any gamma in (-inf, 0) u (0, 1) is accepted
    Utility.power(-10.0)
    Utility.power(0.99)
