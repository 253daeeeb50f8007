"""Closed-form tradeoff curves at n = 1e8.

Run: python demos/03_tradeoff_curves.py [output.png]

Each curve traces (sensing distance order, throughput order) as gamma
sweeps (0, 1.25). The percolation scheme sits above pure TDM everywhere,
and a larger communication path-loss exponent buys a better tradeoff. All
hidden constants are set to 1, so only shapes and orderings carry meaning.
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isac_scaling import analytic

grid = np.round(np.arange(0.05, 1.25, 0.05), 10)
fig, ax = plt.subplots(figsize=(6.5, 5))
for (ac, as_), colour in zip([(3, 2), (4, 2), (3, 3)], ("tab:blue", "tab:red", "tab:green")):
    rows = analytic.tradeoff_curve(1e8, ac, as_, grid)
    for scheme, style in (("proposed", "-"), ("tdm", ":")):
        pts = np.array([(r["d_order"], r["lambda_order"]) for r in rows if r["scheme"] == scheme])
        ax.loglog(pts[:, 0], pts[:, 1], style, color=colour, label=f"{scheme}, alpha_c={ac}, alpha_s={as_}")
ax.set(xlabel="sensing distance order", ylabel="throughput order", title="n = 1e8")
ax.legend(fontsize=8)
out = sys.argv[1] if len(sys.argv) > 1 else "tradeoff.png"
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
