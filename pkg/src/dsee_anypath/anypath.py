"""Anypath cost math and Shortest Anypath First (SAF).

A node ``n`` broadcasting to an ordered forwarding set ``J`` (highest
priority first) pays ``1 / p_nJ`` expected transmissions until some member
hears it, plus the relay-weighted average of the members' own distances.
Links are assumed independent throughout.

Probability arguments named ``probs`` are arrays aligned with
``Topology.links``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .topology import Topology

__all__ = [
    "INF",
    "InfiniteCostError",
    "ForwardingEntry",
    "ForwardingTable",
    "hyperlink_delivery_ratio",
    "hyperlink_cost",
    "relay_weights",
    "remaining_cost",
    "anypath_distance",
    "shortest_anypath_first",
    "brute_force_anypath",
    "evaluate_table_cost",
    "single_path_distance",
]

INF = math.inf
# Minimum improvement for SAF to keep a relay; filters floating-point noise.
INCLUSION_TOL = 1e-12
BRUTE_FORCE_MAX_NODES = 12


class InfiniteCostError(ValueError):
    """A hyperlink with delivery ratio 0 has no finite cost."""


def _check_probs(probs: Sequence[float]) -> None:
    if len(probs) == 0:
        raise ValueError("probability list is empty")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")


def hyperlink_delivery_ratio(probs: Sequence[float]) -> float:
    """Probability that at least one forwarding-set member receives a broadcast."""
    _check_probs(probs)
    miss = 1.0
    for p in probs:
        miss *= 1.0 - p
    return 1.0 - miss


def hyperlink_cost(p_nJ: float) -> float:
    """Expected broadcasts until some member receives: ``1 / p_nJ``."""
    if not 0.0 <= p_nJ <= 1.0:
        raise ValueError(f"delivery ratio {p_nJ} outside [0, 1]")
    if p_nJ == 0.0:
        raise InfiniteCostError("hyperlink delivery ratio is 0")
    return 1.0 / p_nJ


def relay_weights(ordered_probs: Sequence[float]) -> list[float]:
    """Probability that each member ends up relaying, given someone received.

    Member ``j`` relays when it receives and every higher-priority member
    misses, so ``w_j = p_j * prod_{k<j}(1 - p_k) / p_nJ``.
    """
    _check_probs(ordered_probs)
    numerators = []
    miss = 1.0
    for p in ordered_probs:
        numerators.append(p * miss)
        miss *= 1.0 - p
    # sum of numerators equals 1 - miss without its cancellation error
    ratio = sum(numerators)
    if ratio == 0.0:
        raise ValueError("relay weights undefined when every probability is 0")
    return [x / ratio for x in numerators]


def remaining_cost(weights: Sequence[float], relay_distances: Sequence[float]) -> float:
    if len(weights) != len(relay_distances):
        raise ValueError(
            f"length mismatch: {len(weights)} weights, {len(relay_distances)} distances"
        )
    total = 0.0
    for w, d in zip(weights, relay_distances):
        if w == 0.0:
            continue  # a never-chosen relay contributes nothing, even at INF
        total += w * d
    return total


def anypath_distance(ordered_probs: Sequence[float], relay_distances: Sequence[float]) -> float:
    """Hyperlink cost plus remaining cost for one node and one ordered forwarding set."""
    return hyperlink_cost(hyperlink_delivery_ratio(ordered_probs)) + remaining_cost(
        relay_weights(ordered_probs), relay_distances
    )


@dataclass(frozen=True)
class ForwardingEntry:
    node: int
    distance: float
    forwarding_set: tuple[int, ...]


@dataclass(frozen=True)
class ForwardingTable:
    """Per-node anypath distance and priority-ordered forwarding set."""

    destination: int
    entries: Mapping[int, ForwardingEntry]

    def distance(self, node: int) -> float:
        return self.entries[node].distance

    def forwarding_set(self, node: int) -> tuple[int, ...]:
        return self.entries[node].forwarding_set

    def distances(self) -> dict[int, float]:
        return {n: e.distance for n, e in self.entries.items()}

    def key(self) -> tuple[tuple[int, ...], ...]:
        """Hashable routing decision (forwarding sets only), for caching costs."""
        return tuple(self.entries[n].forwarding_set for n in sorted(self.entries))


def _link_prob(probs: Sequence[float], topo: Topology, src: int, dst: int) -> float:
    return float(probs[topo.link_index[src, dst]])


def shortest_anypath_first(probs: Sequence[float], topo: Topology) -> ForwardingTable:
    """Minimum expected-transmission anypath distances toward the destination.

    Dijkstra-like: nodes are settled in ascending distance (ties by id).
    When ``j`` settles, each unsettled in-neighbor ``n`` appends ``j`` to its
    candidate set and keeps it only if that lowers ``D_n``. Appending a relay
    with distance ``D_j`` moves ``D_n`` to a mediant of ``D_n`` and ``D_j``,
    so it helps exactly when ``D_j < D_n`` and relays stay strictly closer.
    """
    if len(probs) != topo.link_count:
        raise ValueError(f"expected {topo.link_count} link probabilities, got {len(probs)}")
    if hasattr(probs, "tolist"):
        probs = probs.tolist()
    links = topo.links
    dest = topo.destination
    dist = {n: INF for n in topo.nodes}
    dist[dest] = 0.0
    # D_n = (1 + acc) / (1 - miss), maintained incrementally
    miss = {n: 1.0 for n in topo.nodes}
    acc = {n: 0.0 for n in topo.nodes}
    fsets: dict[int, list[int]] = {n: [] for n in topo.nodes}
    settled = set()
    heap = [(0.0, dest)]

    while heap:
        d_j, j = heapq.heappop(heap)
        if j in settled or d_j != dist[j]:
            continue
        settled.add(j)
        for li in topo.in_links[j]:
            n = links[li].src
            if n in settled:
                continue
            p = probs[li]
            if p <= 0.0:
                continue
            new_acc = acc[n] + miss[n] * p * d_j
            new_miss = miss[n] * (1.0 - p)
            new_d = (1.0 + new_acc) / (1.0 - new_miss)
            if new_d < dist[n] - INCLUSION_TOL:
                acc[n], miss[n], dist[n] = new_acc, new_miss, new_d
                fsets[n].append(j)
                heapq.heappush(heap, (new_d, n))

    entries = {
        n: ForwardingEntry(n, dist[n], tuple(fsets[n]) if dist[n] < INF else ())
        for n in topo.nodes
    }
    return ForwardingTable(dest, entries)


def brute_force_anypath(probs: Sequence[float], topo: Topology) -> ForwardingTable:
    """Exhaustive oracle: value iteration over every ordered forwarding set.

    At each sweep every node takes the minimum over all nonempty subsets of
    its positive-probability out-neighbors in every priority order. Makes no
    use of the sorted-prefix structure SAF relies on. Test use only.
    """
    if topo.node_count > BRUTE_FORCE_MAX_NODES:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {topo.node_count}"
        )
    dest = topo.destination
    choices: dict[int, list[tuple[tuple[int, ...], tuple[float, ...]]]] = {}
    for n in topo.nodes:
        nbrs = [(topo.links[i].dst, float(probs[i])) for i in topo.out_links[n]]
        nbrs = [(v, p) for v, p in nbrs if p > 0]
        options = []
        for k in range(1, len(nbrs) + 1):
            for combo in itertools.permutations(nbrs, k):
                options.append((tuple(v for v, _ in combo), tuple(p for _, p in combo)))
        choices[n] = options

    def best(n, dist):
        best_d, best_set = INF, ()
        for members, ps in choices[n]:
            d = anypath_distance(ps, [dist[m] for m in members])
            if d < best_d:
                best_d, best_set = d, members
        return best_d, best_set

    dist = {n: INF for n in topo.nodes}
    dist[dest] = 0.0
    chosen: dict[int, tuple[int, ...]] = {n: () for n in topo.nodes}
    for _ in range(4 * topo.node_count + 4):
        new = {n: (0.0, ()) if n == dest else best(n, dist) for n in topo.nodes}
        new_dist = {n: v[0] for n, v in new.items()}
        chosen = {n: v[1] for n, v in new.items()}
        if new_dist == dist:
            break
        dist = new_dist
    else:
        raise RuntimeError("value iteration did not converge")

    entries = {}
    for n in topo.nodes:
        fs = tuple(sorted(chosen[n], key=lambda m: (dist[m], m))) if dist[n] < INF else ()
        entries[n] = ForwardingEntry(n, dist[n], fs)
    return ForwardingTable(dest, entries)


def evaluate_table_cost(
    table: ForwardingTable, true_probs: Sequence[float], topo: Topology
) -> dict[int, float]:
    """Expected transmissions of a fixed table under the true probabilities.

    Keeps the table's forwarding sets and priority order even where true
    distances would rank relays differently. Raises ``ValueError`` if the
    sets form a cycle.
    """
    cost: dict[int, float] = {table.destination: 0.0}
    on_stack: set[int] = set()

    def visit(n: int) -> float:
        if n in cost:
            return cost[n]
        fs = table.forwarding_set(n)
        if not fs:
            cost[n] = INF
            return INF
        if n in on_stack:
            raise ValueError(f"forwarding sets contain a cycle through node {n}")
        on_stack.add(n)
        ps = [_link_prob(true_probs, topo, n, m) for m in fs]
        ratio = hyperlink_delivery_ratio(ps)
        if ratio == 0.0:
            result = INF
        else:
            result = hyperlink_cost(ratio) + remaining_cost(
                relay_weights(ps), [visit(m) for m in fs]
            )
        on_stack.discard(n)
        cost[n] = result
        return result

    for n in table.entries:
        visit(n)
    return cost


def single_path_distance(probs: Sequence[float], topo: Topology) -> float:
    """Classic shortest single path from source with per-link ETX weight ``1/p``."""
    adj: dict[int, list[tuple[int, float]]] = {n: [] for n in topo.nodes}
    for i, l in enumerate(topo.links):
        p = float(probs[i])
        if p > 0:
            adj[l.src].append((l.dst, 1.0 / p))
    dist = {n: INF for n in topo.nodes}
    dist[topo.source] = 0.0
    heap = [(0.0, topo.source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == topo.destination:
            return d
        for v, w in adj[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return INF
