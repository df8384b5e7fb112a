#!/usr/bin/env python3
"""Walk through the complete-market pipeline on a small binomial market.

Covers, in order:
  1. the risk-neutral measure and the exact minimal-measure transition tree
     for an anticipated terminal distribution given as exact fractions,
  2. optimal wealth and holdings for log utility under two anticipations,
  3. the same market under power utility, with the value split into total,
     gain over all-risk-free, and proportion.
"""
from fractions import Fraction as F

import weakinfo as wi

MARKET = dict(s=20.0, h=0.09, k=0.019, r=0.032)


def show_measure_tree():
    print("=" * 72)
    print("minimal measure for nu = (1/4, 1/2, 1/8, 1/8), exact arithmetic")
    print("=" * 72)
    params = wi.BinomialParams(
        s=F(20), h=F(9, 100), k=F(19, 1000), r=F(4, 125), n_periods=3, v=F(200)
    )
    base = wi.risk_neutral_binomial(params)
    print("one-period martingale up-probability:", base.up[0][0])
    tree = wi.minimal_measure(base, (F(1, 4), F(1, 2), F(1, 8), F(1, 8)))
    for n in range(3):
        row = "  ".join(
            "p_up(%d,%d)=%s" % (n, i, tree.up[n][i]) for i in range(n + 1)
        )
        print("time %d:  %s" % (n, row))
    print("terminal distribution (should be nu):", tree.terminal_distribution())
    print()


def show_delta_tree(utility, nu, label):
    params = wi.BinomialParams(n_periods=3, v=200.0, **MARKET)
    sol = wi.solve(params, utility, nu)
    print("-" * 72)
    print("%s, nu = %s" % (label, nu))
    print("-" * 72)
    print("multiplier lambda = %.10g" % sol.lam)
    print("value u = %.7g   gain over risk-free F = %.7g   proportion = %s"
          % (sol.value, sol.extra_value,
             "%.7g" % sol.proportion if sol.proportion is not None else "undefined"))
    for n in range(3):
        print("  delta_%d: %s" % (n, ["%.6f" % d for d in sol.deltas[n]]))
    print("  terminal wealth: %s" % ["%.4f" % w for w in sol.terminal_wealth])
    sim = wi.simulate_strategy(params, sol.deltas)
    worst = max(
        abs(w - sol.terminal_wealth[p.count("d")]) for p, w in sim.items()
    )
    print("  forward-simulation replication error: %.2e" % worst)
    print()


def main():
    show_measure_tree()
    show_delta_tree(wi.Utility.log(), (0.25, 0.25, 0.25, 0.25), "log utility")
    show_delta_tree(wi.Utility.log(), (0.2, 0.4, 0.3, 0.1), "log utility, optimistic")
    show_delta_tree(wi.Utility.power(0.5), (0.25, 0.25, 0.25, 0.25), "power utility (gamma=0.5)")


if __name__ == "__main__":
    main()
