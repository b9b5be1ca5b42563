"""
Anypath costs on a three-node network
=====================================

Node 1 can reach the destination 3 directly (p = 0.5) or through node 2
(p = 0.8, then a perfect 2 -> 3 link). Broadcasting to both at once beats
either single route.
"""

from fractions import Fraction

import numpy as np

from dsee_anypath import (
    anypath_distance,
    bundled_topology,
    hyperlink_delivery_ratio,
    relay_weights,
    shortest_anypath_first,
    single_path_distance,
)

topo = bundled_topology("three_node")
print(topo.links)

# Each option for node 1, written as (ordered forwarding set, link probs,
# downstream distances). Node 3 is the destination (distance 0) and node 2
# needs exactly one transmission.
options = {
    "{3}": ([0.5], [0.0]),
    "{2}": ([0.8], [1.0]),
    "{3, 2}": ([0.5, 0.8], [0.0, 1.0]),
}
for name, (ps, ds) in options.items():
    print(f"{name:>7}: delivery {hyperlink_delivery_ratio(ps):.2f}, "
          f"weights {np.round(relay_weights(ps), 4)}, distance {anypath_distance(ps, ds):.4f}")

print("exact value of the best option:", Fraction(14, 9), "=", 14 / 9)

# SAF finds the same answer without enumerating subsets.
table = shortest_anypath_first(topo.true_probs, topo)
for n in topo.nodes:
    print(n, round(table.distance(n), 4), table.forwarding_set(n))

print("single-path ETX:", single_path_distance(topo.true_probs, topo))
