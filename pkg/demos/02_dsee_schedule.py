"""
The DSEE exploration schedule
=============================

DSEE explores in slot t whenever fewer than unit_count * ceil(ln(t+1)^2)
exploration slots have happened. The count grows like log squared, so the
explored fraction shrinks toward zero.
"""

import numpy as np

from dsee_anypath import DseeState, Phase, bundled_topology, dsee_step, exploration_budget

topo = bundled_topology("seven_node")
state = DseeState.for_topology(topo)
print("unit count (nodes x max out-degree):", state.unit_count)

horizon = 50_000
explore = np.array([dsee_step(state) is Phase.EXPLORE for _ in range(horizon)])
counts = np.cumsum(explore)

for t in (100, 1000, 5000, 20_000, 50_000):
    print(f"t={t:>6}: explored {counts[t - 1]:>5} slots "
          f"({counts[t - 1] / t:.3f} of all), budget {exploration_budget(t, DseeState.for_topology(topo))}")

# The hyperlink-level budget counts every subset of out-neighbors.
hyper = DseeState.for_topology(topo, budget_mode="per_hyperlink")
print("per-hyperlink unit count:", hyper.unit_count)
