#!/usr/bin/env python3
"""How the cluster-count decision works.

Runs exact 1-D 2-means and the gap statistic on three kinds of data:
clearly bimodal, evenly spread, and tightly concentrated. Prints the full
trace (W, G, adjusted deviation) behind each verdict.
"""

import numpy as np

from trojandec import decide, gap_statistic, kmeans_1d

rng = np.random.default_rng(0)

datasets = {
    "bimodal (162 near 0.55, 162 near 0.95)":
        np.concatenate([0.55 + 0.005 * rng.standard_normal(162),
                        0.95 + 0.005 * rng.standard_normal(162)]),
    "evenly spread (324 points on [0, 1])":
        (np.arange(324) + 0.5) / 324.0,
    "concentrated (324 points near 0.99)":
        0.99 + 0.002 * rng.standard_normal(324),
}

for name, values in datasets.items():
    _, w1 = kmeans_1d(values, 1)
    labels, w2 = kmeans_1d(values, 2)
    trace = gap_statistic(values, B=100, seed=0)
    k_star = decide(trace)
    print(f"--- {name}")
    print(f"  W1={w1:.4f}  W2={w2:.4f}  (split sizes "
          f"{int((labels == 0).sum())}/{int((labels == 1).sum())})")
    print(f"  G(1)={trace.G[0]:+.4f}  G(2)={trace.G[1]:+.4f}  "
          f"s'_2={trace.s_prime[1]:.4f}")
    rule = "G(1) >= G(2) - s'_2" if k_star == 1 else "G(1) <  G(2) - s'_2"
    print(f"  {rule}  ->  K* = {k_star} "
          f"({'clean' if k_star == 1 else 'trojaned'})\n")

print("The adjusted deviation s'_2 is the guard band: splitting evenly")
print("spread data always reduces dispersion a little, so the rule only")
print("reports two clusters when the improvement beats the reference sets")
print("by more than one deviation.")
