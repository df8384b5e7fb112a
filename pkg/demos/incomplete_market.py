#!/usr/bin/env python3
"""Two-period trinomial market: extremal measures, multipliers, hedging.

With three branches and two assets the martingale measure is not unique.
Every one-period martingale measure is a mixture of two extremal triples;
their per-period products give 2^N path measures, and "budget-priced under
all of them" is the constraint set the optimizer works against.

A product-form path anticipation keeps the optimal claim attainable, so the
holdings derived from any interior measure agree across all three pairwise
difference quotients and the forward-simulated strategy lands exactly on the
optimal terminal wealth.  A generic path anticipation does not: the solver
still prices it, but the hedging step refuses loudly.  Both cases are shown.
"""
import numpy as np

import weakinfo as wi
from weakinfo.trinomial import ReplicationError, path_index, path_strings

PARAMS = wi.TrinomialParams(s=10.0, a=1.2, b=1.05, c=0.9, r=0.02, n_periods=2, v=100.0)


def show_measures():
    print("=" * 72)
    print("extremal one-period measures and their products")
    print("=" * 72)
    pair = wi.extremal_measures(PARAMS)
    print("p0 (middle/bottom support):", tuple("%.6f" % float(x) for x in pair.p0))
    print("p1 (top/bottom support):   ", tuple("%.6f" % float(x) for x in pair.p1))
    mult = np.array(PARAMS.multipliers)
    for name, tri in (("p0", pair.p0), ("p1", pair.p1)):
        drift = float(np.dot([float(x) for x in tri], mult))
        print("  E_%s[gross return] = %.10g  (1+r = %.10g)" % (name, drift, PARAMS.rho))
    pm = wi.product_measures(pair, PARAMS.n_periods)
    print("product measures:", pm.choices())
    print()


def solve_and_hedge(nu, label):
    print("-" * 72)
    print(label)
    print("-" * 72)
    sol = wi.solve_lambda_system(PARAMS, wi.Utility.log(), nu)
    print("lambda:", ["%.6g" % x for x in sol.lam])
    print("max budget residual: %.2e  (iterations: %d)" % (sol.max_residual, sol.iterations))
    print("achieved expected utility: %.8f" % sol.value)
    try:
        wealth, deltas, report = wi.trinomial_wealth_and_delta(PARAMS, sol.terminal_wealth)
    except ReplicationError as exc:
        print("hedging refused:", exc)
        print()
        return
    print("root wealth: %.8f   worst pairwise-quotient gap: %.2e"
          % (wealth[""], report.worst_gap))
    for node in ("", "u", "m", "d"):
        print("  delta at %-6r = %12.6f" % (node or "<root>", deltas[node]))
    sim = wi.simulate_trinomial_strategy(PARAMS, deltas)
    worst = max(
        abs(sim[p] - sol.terminal_wealth[path_index(p)]) for p in path_strings(2)
    )
    print("forward-simulation replication error: %.2e" % worst)
    print()


def main():
    show_measures()
    nu_product = wi.product_path_anticipation(PARAMS, [(0.5, 0.3, 0.2), (0.25, 0.45, 0.3)])
    solve_and_hedge(nu_product, "product-form anticipation (attainable claim)")
    rng = np.random.default_rng(3)
    nu_generic = rng.dirichlet(np.ones(9))
    nu_generic = np.maximum(nu_generic, 1e-3)
    nu_generic /= nu_generic.sum()
    solve_and_hedge(nu_generic, "generic path anticipation (not attainable)")


if __name__ == "__main__":
    main()
