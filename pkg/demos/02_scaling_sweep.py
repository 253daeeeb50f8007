"""Throughput and sensing distance against network size.

Run: python demos/02_scaling_sweep.py [output.png]

A reduced sweep (4 replicates instead of 20) over four sizes and three
power exponents gamma, with P = n^gamma. The optimal tradeoff predicts a
throughput slope of -(gamma/alpha_c + 1/2) and a sensing-distance slope of
gamma/alpha_s on log-log axes; the dashed lines carry those slopes through
the first measured point. Expect a few minutes on one core.
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isac_scaling import ExperimentConfig, run_sweep

cfg = ExperimentConfig(replicates=4)
report = run_sweep(cfg, progress=lambda r: print(f"  n={r.n:g} gamma={r.gamma:g} replicate {r.replicate}"))

fig, (a1, a2) = plt.subplots(1, 2, figsize=(11, 4.5))
for g, colour in zip(cfg.gamma, ("tab:blue", "tab:orange", "tab:green")):
    lam = np.array(report.median_by_size(lambda r: r.phases["highway"].throughput_min, g))
    d = np.array(report.median_by_size(lambda r: r.d_network, g))
    s_lam, _ = report.slope(lambda r: r.phases["highway"].throughput_min, g)
    s_d, _ = report.slope(lambda r: r.d_network, g)
    print(f"gamma={g:g}: throughput slope {s_lam:+.3f} (theory {-(g / 3 + 0.5):+.3f}), "
          f"sensing slope {s_d:+.3f} (theory {g / 2:+.3f})")
    a1.loglog(lam[:, 0], lam[:, 1], "o-", color=colour, label=f"gamma={g:g}")
    a1.loglog(lam[:, 0], lam[0, 1] * (lam[:, 0] / lam[0, 0]) ** -(g / 3 + 0.5), "--", color=colour)
    a2.loglog(d[:, 0], d[:, 1], "o-", color=colour, label=f"gamma={g:g}")
    a2.loglog(d[:, 0], d[0, 1] * (d[:, 0] / d[0, 0]) ** (g / 2), "--", color=colour)
a1.set(xlabel="n", ylabel="highway throughput per node", title="throughput")
a2.set(xlabel="n", ylabel="minimum sensing distance", title="sensing distance")
a1.legend()
out = sys.argv[1] if len(sys.argv) > 1 else "scaling.png"
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
