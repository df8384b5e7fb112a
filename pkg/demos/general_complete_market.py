#!/usr/bin/env python3
"""Three-state complete market with a full M x M replication step.

The market is specified by initial prices and a per-period gross-return
matrix (states x assets, asset 0 risk-free).  At every node the martingale
state probabilities solve D^T q = (1+r) s, and the optimal next-period
wealth is replicated by the holdings vector delta = D^{-1} wealth.

The demo prices a mildly pessimistic leaf anticipation under log utility and
verifies the two identities that make the solution a genuine trading
strategy: the replication system is satisfied at every node, and the cost of
the holdings equals the node's wealth.
"""
import numpy as np

import weakinfo as wi

FACTORS = [
    [[1.05, 1.30, 0.80], [1.05, 0.95, 1.25], [1.05, 0.75, 1.05]],
    [[1.05, 1.30, 0.80], [1.05, 0.95, 1.25], [1.05, 0.75, 1.05]],
]


def main():
    market = wi.CompleteMarket([1.0, 10.0, 5.0], FACTORS, r=0.05, v=100.0)
    print("states:", market.m_states, " assets:", market.d_assets,
          " periods:", market.n_periods)
    print("arbitrage-free:", wi.validate_no_arbitrage(market).ok)
    q = market.transition_probabilities(())
    print("root martingale state weights:", np.round(q, 6))

    leaves = list(market.leaves())
    weights = np.array([1.0 + 0.5 * sum(leaf) for leaf in leaves])
    weights /= weights.sum()  # more mass on the lower states
    sol = wi.solve_complete_market(market, wi.Utility.log(), dict(zip(leaves, weights)))

    print("\nlambda = %.8g" % sol.lam)
    print("value u = %.8f  extra F = %.8f  proportion = %.8f"
          % (sol.value, sol.extra_value, sol.proportion))
    print("root wealth:", "%.10f" % sol.wealth[()])

    worst_system = 0.0
    worst_cost = 0.0
    for node, delta in sol.deltas.items():
        d_mat = market.price_matrix(node)
        children = np.array([sol.wealth[node + (j,)] for j in range(3)])
        worst_system = max(worst_system, float(np.max(np.abs(d_mat @ delta - children))))
        cols = market.replication_assets(len(node))
        cost = float(np.dot(market.prices_at(node)[cols], delta))
        worst_cost = max(worst_cost, abs(cost - sol.wealth[node]))
    print("worst replication residual: %.2e" % worst_system)
    print("worst self-financing (cost vs wealth) gap: %.2e" % worst_cost)
    print("\nroot holdings (bond, asset 1, asset 2):", np.round(sol.deltas[()], 6))


if __name__ == "__main__":
    main()
