"""A single network and the highway system built on top of it.

Run: python demos/01_highway_lattice.py [output.png]

The square is cut into tilted cells. A cell is open when it holds at least
one node; open cells chain into left-right and bottom-top crossings, and
those crossings become the multihop backbone. The figure shows the nodes,
the open cells, and the relays of every extracted highway.
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isac_scaling import generate_network
from isac_scaling.percolation import extract_highways, mark_open_closed, partition

n = 2500
inst = generate_network(n, seed=1)
lat = extract_highways(mark_open_closed(partition(inst, varsigma=1.5, f_exponent=0.0, alpha_c=3.0)), kappa=4.0)

opened = lat.open_cells[lat.cell_inside].mean()
n_h = sum(h.system == "h" for h in lat.highways)
n_v = len(lat.highways) - n_h
print(f"{inst.num_nodes} nodes, lattice dimension {lat.xi:.1f}, open fraction {opened:.2f}")
print(f"{n_h} horizontal and {n_v} vertical highways in rectangles of height {lat.rect_height}")

fig, ax = plt.subplots(figsize=(7, 7))
ax.scatter(*inst.nodes.T, s=1, c="0.7")
for h in lat.highways:
    xy = inst.nodes[h.relays]
    ax.plot(*xy.T, lw=0.8, color="tab:blue" if h.system == "h" else "tab:red")
side = np.sqrt(n)
ax.set(xlim=(0, side), ylim=(0, side), aspect="equal", title="highways (blue: horizontal, red: vertical)")
out = sys.argv[1] if len(sys.argv) > 1 else "highways.png"
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
