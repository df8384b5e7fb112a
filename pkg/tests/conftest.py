from __future__ import annotations

from fractions import Fraction

import pytest

from weakinfo import BinomialParams, TrinomialParams


@pytest.fixture
def fig_market() -> BinomialParams:
    """The 3-period market used by the golden tree figures."""
    return BinomialParams(s=20.0, h=0.09, k=0.019, r=0.032, n_periods=3, v=200.0)


@pytest.fixture
def fig_market_1p() -> BinomialParams:
    return BinomialParams(s=20.0, h=0.09, k=0.019, r=0.032, n_periods=1, v=200.0)


@pytest.fixture
def fig_market_exact() -> BinomialParams:
    """Same market with rational coefficients for exact-arithmetic checks."""
    return BinomialParams(
        s=Fraction(20), h=Fraction(9, 100), k=Fraction(19, 1000),
        r=Fraction(4, 125), n_periods=3, v=Fraction(200),
    )


@pytest.fixture
def sweep_market() -> BinomialParams:
    """The 5-period market used by the wealth-sweep curves."""
    return BinomialParams(s=20.0, h=0.08, k=0.04, r=0.03, n_periods=5, v=200.0)


@pytest.fixture
def tri_market() -> TrinomialParams:
    return TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.0, n_periods=2, v=100.0)


@pytest.fixture
def tri_market_exact() -> TrinomialParams:
    return TrinomialParams(
        s=Fraction(10), a=Fraction(6, 5), b=Fraction(21, 20), c=Fraction(9, 10),
        r=Fraction(0), n_periods=2, v=Fraction(100),
    )
