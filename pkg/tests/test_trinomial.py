from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest

from oracles import maximize_terminal_claim
from weakinfo import (
    AdmissibilityError,
    BinomialParams,
    TrinomialParams,
    Utility,
    budget_residuals,
    extremal_measures,
    interior_measure,
    lift_terminal_anticipation,
    optimal_terminal_wealth_trinomial,
    product_measures,
    product_path_anticipation,
    simulate_trinomial_strategy,
    solve_lambda_system,
    trinomial_wealth_and_delta,
    value_of_information,
)
from weakinfo.trinomial import ReplicationError, path_index, path_strings


def _product_nu(params, rng):
    triples = []
    for _ in range(params.n_periods):
        w = rng.dirichlet(np.ones(3))
        w = np.maximum(w, 0.05)
        triples.append(w / w.sum())
    return product_path_anticipation(params, triples)


# ---------------------------------------------------------------------------
# extremal measures
# ---------------------------------------------------------------------------

def test_extremal_triples_exact(tri_market_exact):
    pair = extremal_measures(tri_market_exact)
    # b >= 1+r branch: zero on top for p0, zero in the middle for p1
    assert pair.p0 == (0, F(2, 3), F(1, 3))
    assert pair.p1 == (F(1, 3), 0, F(2, 3))
    mult = tri_market_exact.multipliers
    rho = tri_market_exact.rho
    assert sum(p * m for p, m in zip(pair.p0, mult)) == rho
    assert sum(p * m for p, m in zip(pair.p1, mult)) == rho
    assert sum(pair.p0) == 1 and sum(pair.p1) == 1


def test_extremal_triples_b_below_rho():
    p = TrinomialParams(
        s=F(10), a=F(6, 5), b=F(1), c=F(9, 10), r=F(1, 20), n_periods=1, v=F(100)
    )
    pair = extremal_measures(p)
    assert pair.p0 == (F(1, 4), F(3, 4), 0)
    assert pair.middle_below_rho
    mult = p.multipliers
    assert sum(x * m for x, m in zip(pair.p0, mult)) == p.rho


def test_extremal_requires_admissibility():
    bad = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.5, n_periods=1, v=100.0)
    with pytest.raises(AdmissibilityError, match="a > 1\\+r"):
        extremal_measures(bad)


def test_interior_measure_is_strictly_positive(tri_market):
    pair = extremal_measures(tri_market)
    mid = interior_measure(pair, 0.5)
    assert all(x > 0 for x in mid)
    assert sum(mid) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        interior_measure(pair, 1.0)


# ---------------------------------------------------------------------------
# product measures
# ---------------------------------------------------------------------------

def test_one_period_products_are_the_extremal_pair(tri_market_exact):
    p1 = TrinomialParams(
        s=F(10), a=F(6, 5), b=F(21, 20), c=F(9, 10), r=F(0), n_periods=1, v=F(100)
    )
    pair = extremal_measures(p1)
    pm = product_measures(pair, 1)
    assert pm.choices() == ["0", "1"]
    for outcome, idx in (("u", 0), ("m", 1), ("d", 2)):
        assert pm.path_probability("0", outcome) == pair.p0[idx]
        assert pm.path_probability("1", outcome) == pair.p1[idx]


def test_two_period_products(tri_market_exact):
    pair = extremal_measures(tri_market_exact)
    pm = product_measures(pair, 2)
    assert pm.choices() == ["00", "01", "10", "11"]
    for c0 in "01":
        for c1 in "01":
            tri0 = pair.p0 if c0 == "0" else pair.p1
            tri1 = pair.p0 if c1 == "0" else pair.p1
            for o0, i0 in (("u", 0), ("m", 1), ("d", 2)):
                for o1, i1 in (("u", 0), ("m", 1), ("d", 2)):
                    assert pm.path_probability(c0 + c1, o0 + o1) == tri0[i0] * tri1[i1]


def test_mixture_expansion_matches_products():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.0, n_periods=3, v=100.0)
    pair = extremal_measures(p)
    pm = product_measures(pair, 3)
    w = pair.as_matrix()
    rng = np.random.default_rng(9)
    for _ in range(10):
        t = rng.uniform(0.1, 0.9, 3)
        for path in path_strings(3):
            direct = 1.0
            for n, step in enumerate(path):
                tri = t[n] * w[0] + (1 - t[n]) * w[1]
                direct *= tri[{"u": 0, "m": 1, "d": 2}[step]]
            combo = 0.0
            for choice in pm.choices():
                weight = np.prod([t[n] if ch == "0" else 1 - t[n] for n, ch in enumerate(choice)])
                combo += weight * float(pm.path_probability(choice, path))
            assert combo == pytest.approx(direct, abs=1e-12)


def test_interior_mixtures_price_the_stock():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.04, n_periods=1, v=100.0)
    pair = extremal_measures(p)
    mult = np.array(p.multipliers)
    rng = np.random.default_rng(13)
    for t in rng.uniform(0.01, 0.99, 100):
        tri = np.array([float(x) for x in interior_measure(pair, t)])
        assert float(tri @ mult) == pytest.approx(p.rho, abs=1e-12)
        assert np.all(tri > 0)


# ---------------------------------------------------------------------------
# the multiplier system
# ---------------------------------------------------------------------------

def test_one_period_log_matches_direct_oracle():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.02, n_periods=1, v=100.0)
    nu = np.array([0.5, 0.3, 0.2])
    sol = solve_lambda_system(p, Utility.log(), nu)
    assert sol.max_residual <= 1e-8 * p.v
    pm = product_measures(extremal_measures(p), 1)
    constraints = pm.matrix() / p.rho
    x, value = maximize_terminal_claim(
        constraints, np.array([p.v, p.v]), nu, Utility.log(), positive=True
    )
    assert sol.value == pytest.approx(value, abs=1e-6)
    assert np.allclose(sol.terminal_wealth, x, rtol=1e-4)


def test_one_period_power_matches_direct_oracle():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.02, n_periods=1, v=100.0)
    nu = np.array([0.45, 0.25, 0.30])
    sol = solve_lambda_system(p, Utility.power(0.5), nu)
    pm = product_measures(extremal_measures(p), 1)
    x, value = maximize_terminal_claim(
        pm.matrix() / p.rho, np.array([p.v, p.v]), nu, Utility.power(0.5), positive=True
    )
    assert sol.value == pytest.approx(value, abs=1e-6)


def test_constant_claim_fixture(tri_market):
    # nu proportional to the mean product measure aligns all densities, so
    # the optimum is the risk-free claim
    pair = extremal_measures(tri_market)
    w = pair.as_matrix()
    mean = np.array([1.0])
    for _ in range(tri_market.n_periods):
        mean = np.kron(mean, 0.5 * (w[0] + w[1]))
    sol = solve_lambda_system(tri_market, Utility.log(), mean)
    flat = tri_market.v * tri_market.rho**tri_market.n_periods
    assert np.allclose(sol.terminal_wealth, flat, rtol=1e-8)
    wealth, deltas, report = trinomial_wealth_and_delta(tri_market, sol.terminal_wealth)
    assert report.ok
    assert all(abs(d) <= 1e-8 for d in deltas.values())


def test_log_wealth_scaling_halves_multipliers(tri_market):
    rng = np.random.default_rng(21)
    nu = _product_nu(tri_market, rng)
    sol1 = solve_lambda_system(tri_market, Utility.log(), nu)
    double = TrinomialParams(
        s=tri_market.s, a=tri_market.a, b=tri_market.b, c=tri_market.c,
        r=tri_market.r, n_periods=tri_market.n_periods, v=2 * tri_market.v,
    )
    sol2 = solve_lambda_system(double, Utility.log(), nu)
    assert np.allclose(sol2.lam, sol1.lam / 2, rtol=1e-7)
    assert np.allclose(sol2.terminal_wealth, 2 * sol1.terminal_wealth, rtol=1e-7)


def test_budgets_hold_under_every_product_measure(tri_market):
    rng = np.random.default_rng(4)
    for utility in (Utility.log(), Utility.power(0.5), Utility.exponential(0.02)):
        nu = _product_nu(tri_market, rng)
        sol = solve_lambda_system(tri_market, utility, nu)
        res = budget_residuals(tri_market, sol.terminal_wealth)
        assert np.max(np.abs(res)) <= 1e-8 * tri_market.v


def test_terminal_wealth_formula_specializations(tri_market):
    rng = np.random.default_rng(6)
    nu = _product_nu(tri_market, rng)
    pm = product_measures(extremal_measures(tri_market), 2)
    w_mat = pm.matrix()
    rho_n = tri_market.rho**2

    sol = solve_lambda_system(tri_market, Utility.log(), nu)
    mix = w_mat.T @ sol.lam
    # log specialization: V = rho^N / sum_j lam_j P^j(b) / nu(b)
    assert np.allclose(sol.terminal_wealth, rho_n / (mix / nu), rtol=1e-12)
    again = optimal_terminal_wealth_trinomial(sol.lam, tri_market, Utility.log(), nu)
    assert np.allclose(again, sol.terminal_wealth, rtol=1e-12)

    alpha = 0.02
    solx = solve_lambda_system(tri_market, Utility.exponential(alpha), nu)
    mix = w_mat.T @ solx.lam
    # exponential specialization: V = -(1/alpha) ln( (1/(rho^N alpha)) sum_j lam_j dP^j/dnu )
    expected = -np.log(mix / nu / (rho_n * alpha)) / alpha
    assert np.allclose(solx.terminal_wealth, expected, rtol=1e-10)


# ---------------------------------------------------------------------------
# hedging
# ---------------------------------------------------------------------------

def test_one_period_pairwise_delta_consistency():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.02, n_periods=1, v=100.0)
    nu = np.array([0.5, 0.3, 0.2])
    sol = solve_lambda_system(p, Utility.log(), nu)
    v = sol.terminal_wealth
    d_ab = (v[0] - v[1]) / (10 * (1.2 - 1.05))
    d_bc = (v[1] - v[2]) / (10 * (1.05 - 0.9))
    d_ac = (v[0] - v[2]) / (10 * (1.2 - 0.9))
    assert d_ab == pytest.approx(d_bc, rel=1e-7)
    assert d_ab == pytest.approx(d_ac, rel=1e-7)
    _, deltas, report = trinomial_wealth_and_delta(p, sol.terminal_wealth)
    assert report.ok and report.worst_gap <= 1e-7
    assert deltas[""] == pytest.approx(d_ac, rel=1e-12)


@pytest.mark.parametrize("utility", [Utility.log(), Utility.power(0.5), Utility.exponential(0.02)],
                         ids=lambda u: u.describe())
def test_forward_simulation_reproduces_terminal_wealth(tri_market, utility):
    rng = np.random.default_rng(8)
    nu = _product_nu(tri_market, rng)
    sol = solve_lambda_system(tri_market, utility, nu)
    wealth, deltas, report = trinomial_wealth_and_delta(tri_market, sol.terminal_wealth)
    assert report.ok
    assert wealth[""] == pytest.approx(tri_market.v, rel=1e-9)
    sim = simulate_trinomial_strategy(tri_market, deltas)
    for path, value in sim.items():
        assert value == pytest.approx(sol.terminal_wealth[path_index(path)], rel=1e-7)


def test_non_product_anticipation_fails_replication_loudly(tri_market):
    # the product-measure budgets are a relaxation of attainability; a
    # generic path anticipation solves the system but is not replicable,
    # and the check must say so instead of guessing a pair
    rng = np.random.default_rng(10)
    nu = rng.dirichlet(np.ones(9))
    nu = np.maximum(nu, 1e-3)
    nu /= nu.sum()
    sol = solve_lambda_system(tri_market, Utility.log(), nu)
    assert sol.max_residual <= 1e-8 * tri_market.v
    with pytest.raises(ReplicationError, match="node"):
        trinomial_wealth_and_delta(tri_market, sol.terminal_wealth)


def test_constant_terminal_wealth_needs_no_hedging(tri_market):
    flat = np.full(9, tri_market.v * tri_market.rho**2)
    _, deltas, report = trinomial_wealth_and_delta(tri_market, flat)
    assert report.ok
    assert all(d == pytest.approx(0.0, abs=1e-14) for d in deltas.values())


# ---------------------------------------------------------------------------
# budget equivalence and value bounds
# ---------------------------------------------------------------------------

def test_budget_equivalence_both_directions(tri_market):
    rng = np.random.default_rng(12)
    nu = _product_nu(tri_market, rng)
    sol = solve_lambda_system(tri_market, Utility.log(), nu)
    pm = product_measures(extremal_measures(tri_market), 2)
    w_mat = pm.matrix()
    disc = tri_market.rho ** (-2)
    budgets = w_mat @ (disc * sol.terminal_wealth)
    for _ in range(100):
        c = rng.dirichlet(np.ones(4))
        combo = float(c @ budgets)
        assert combo == pytest.approx(tri_market.v, rel=1e-10)
    # converse: violate one budget, random combinations must notice
    bad = sol.terminal_wealth.copy()
    bad[0] *= 1.5
    bad_budgets = w_mat @ (disc * bad)
    detected = 0
    for _ in range(100):
        c = rng.dirichlet(np.ones(4))
        if abs(float(c @ bad_budgets) - tri_market.v) > 1e-6:
            detected += 1
    assert detected == 100


def test_value_dominates_risk_free(tri_market):
    rng = np.random.default_rng(14)
    for utility in (Utility.log(), Utility.power(0.5), Utility.exponential(0.02)):
        nu = _product_nu(tri_market, rng)
        sol = solve_lambda_system(tri_market, utility, nu)
        riskfree = utility.evaluate(tri_market.v * tri_market.rho**2)
        assert sol.value >= riskfree - 1e-10


def test_value_bounded_by_two_branch_market_when_middle_shunned():
    p = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.02, n_periods=2, v=100.0)
    eps = 1e-8
    nu = np.full(9, eps / 5)
    for path in ("uu", "ud", "du", "dd"):
        nu[path_index(path)] = (1 - eps) / 4
    nu /= nu.sum()
    sol = solve_lambda_system(p, Utility.log(), nu, tol=1e-12)
    binom = BinomialParams(s=10.0, h=0.2, k=0.1, r=0.02, n_periods=2, v=100.0)
    bound = value_of_information(binom, Utility.log(), (0.25, 0.5, 0.25))
    assert sol.value <= bound.value + 1e-3


# ---------------------------------------------------------------------------
# anticipation plumbing and caps
# ---------------------------------------------------------------------------

def test_terminal_lift_spreads_by_reference_measure(tri_market):
    nu_term = np.array([0.1, 0.15, 0.2, 0.25, 0.2, 0.1])
    nu_paths = lift_terminal_anticipation(tri_market, nu_term)
    assert nu_paths.sum() == pytest.approx(1.0, abs=1e-12)
    from weakinfo.markets import TrinomialLattice

    lattice = TrinomialLattice(tri_market)
    got = np.zeros(6)
    for path in path_strings(2):
        got[lattice.terminal_index(*lattice.path_terminal(path))] += nu_paths[path_index(path)]
    assert np.allclose(got, nu_term, atol=1e-12)


def test_path_anticipation_validation(tri_market):
    with pytest.raises(ValueError):
        solve_lambda_system(tri_market, Utility.log(), np.full(8, 1 / 8))
    bad = np.full(9, 1 / 9)
    bad[0] = 0.0
    bad[1] += 1 / 9
    with pytest.raises(Exception):
        solve_lambda_system(tri_market, Utility.log(), bad)


def test_period_cap_is_enforced():
    big = TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.0, n_periods=13, v=100.0)
    with pytest.raises(AdmissibilityError, match="capped"):
        solve_lambda_system(big, Utility.log(), np.full(3**13, 1.0 / 3**13))
