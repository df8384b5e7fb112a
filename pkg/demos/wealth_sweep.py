#!/usr/bin/env python3
"""Value / extra value / proportion as functions of initial wealth.

Five-period market (r = 3%, h = 8%, k = 4%), four stock-price anticipations:
precise (95% on one node), uniform, conservative, and risk-neutral (which by
construction carries no information, so its extra value is identically 0).

For log utility the extra value does not depend on wealth while the
proportion falls with wealth; for power utility the proportion is the
wealth-independent quantity.  The table below shows both.
"""
import numpy as np

import weakinfo as wi


def run(utility, label):
    params = wi.BinomialParams(s=20.0, h=0.08, k=0.04, r=0.03, n_periods=5, v=200.0)
    presets = wi.anticipation_presets(params)
    grid = np.linspace(50, 1000, 20)
    rows = wi.sweep(params, utility, presets, grid)
    print("=" * 78)
    print(label)
    print("=" * 78)
    print("%-14s %8s %12s %12s %12s" % ("anticipation", "v", "value", "extra", "prop"))
    for row in rows:
        if row.v not in (50.0, 500.0, 1000.0):
            continue
        print("%-14s %8.0f %12.6g %12.6g %12.6g"
              % (row.anticipation, row.v, row.value, row.extra_value, row.proportion))
    by_name = {}
    for row in rows:
        by_name.setdefault(row.anticipation, []).append(row)
    print()
    for name, chunk in sorted(by_name.items()):
        extras = [r.extra_value for r in chunk]
        props = [r.proportion for r in chunk]
        print("  %-14s extra-value spread %.2e, proportion spread %.2e"
              % (name, max(extras) - min(extras), max(props) - min(props)))
    print()


def main():
    run(wi.Utility.log(), "log utility: extra value flat in wealth")
    run(wi.Utility.power(0.5), "power utility (gamma=0.5): proportion flat in wealth")


if __name__ == "__main__":
    main()
