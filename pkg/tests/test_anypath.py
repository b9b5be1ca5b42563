import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dsee_anypath import (
    INF,
    ForwardingEntry,
    ForwardingTable,
    InfiniteCostError,
    Link,
    Topology,
    anypath_distance,
    brute_force_anypath,
    evaluate_table_cost,
    hyperlink_cost,
    hyperlink_delivery_ratio,
    parse_topology,
    random_topology,
    relay_weights,
    remaining_cost,
    shortest_anypath_first,
    single_path_distance,
)

probs_st = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6)


def enumerate_outcomes(probs):
    """Yield (reception vector, probability) over every joint outcome."""
    for bits in itertools.product((0, 1), repeat=len(probs)):
        pr = 1.0
        for b, p in zip(bits, probs):
            pr *= p if b else 1.0 - p
        yield bits, pr


def enum_ratio(probs):
    return sum(pr for bits, pr in enumerate_outcomes(probs) if any(bits))


def enum_weights(probs):
    ratio = enum_ratio(probs)
    w = [0.0] * len(probs)
    for bits, pr in enumerate_outcomes(probs):
        if any(bits):
            w[bits.index(1)] += pr
    return [x / ratio for x in w]


# ---- hyperlink delivery ratio ------------------------------------------------

@pytest.mark.parametrize(
    "probs, expected", [([1.0], 1.0), ([0.5, 0.5], 0.75), ([0.8, 0.5], 0.9), ([0.0, 0.0], 0.0)]
)
def test_delivery_ratio_examples(probs, expected):
    assert hyperlink_delivery_ratio(probs) == pytest.approx(expected, abs=1e-15)
    assert enum_ratio(probs) == pytest.approx(expected, abs=1e-15)


def test_delivery_ratio_errors():
    with pytest.raises(ValueError):
        hyperlink_delivery_ratio([])
    with pytest.raises(ValueError):
        hyperlink_delivery_ratio([0.5, 1.2])


@given(probs_st)
def test_delivery_ratio_matches_enumeration(probs):
    assert hyperlink_delivery_ratio(probs) == pytest.approx(enum_ratio(probs), abs=1e-12)


@given(probs_st, st.floats(0.0, 1.0), st.integers(0, 5), st.floats(0.0, 1.0))
def test_delivery_ratio_monotone(probs, extra, idx, bump):
    base = hyperlink_delivery_ratio(probs)
    assert hyperlink_delivery_ratio(probs + [extra]) >= base - 1e-15
    i = idx % len(probs)
    raised = list(probs)
    raised[i] = max(raised[i], bump)
    assert hyperlink_delivery_ratio(raised) >= base - 1e-15


# ---- hyperlink cost ------------------------------------------------------------

def test_hyperlink_cost():
    assert hyperlink_cost(1.0) == 1.0
    assert hyperlink_cost(0.5) == 2.0
    with pytest.raises(InfiniteCostError):
        hyperlink_cost(0.0)


def test_hyperlink_cost_is_geometric_mean():
    rng = np.random.default_rng(3)
    draws = rng.geometric(0.5, size=200_000)
    assert draws.mean() == pytest.approx(hyperlink_cost(0.5), rel=0.01)


# ---- relay weights -------------------------------------------------------------

@pytest.mark.parametrize(
    "probs, expected",
    [([1.0, 0.3], [1.0, 0.0]), ([0.5, 0.5], [2 / 3, 1 / 3]), ([0.5, 0.8], [5 / 9, 4 / 9])],
)
def test_relay_weights_examples(probs, expected):
    assert relay_weights(probs) == pytest.approx(expected, abs=1e-15)
    assert enum_weights(probs) == pytest.approx(expected, abs=1e-15)


def test_relay_weights_all_zero():
    with pytest.raises(ValueError):
        relay_weights([0.0, 0.0])


@given(probs_st)
def test_relay_weights_match_enumeration_and_normalize(probs):
    assume(hyperlink_delivery_ratio(probs) > 1e-9)
    w = relay_weights(probs)
    assert min(w) >= 0
    assert abs(sum(w) - 1.0) <= 1e-12
    assert w == pytest.approx(enum_weights(probs), abs=1e-9)


def test_product_of_probabilities_form_does_not_normalize():
    # numerator p_j * prod_{k<j} p_k in place of prod_{k<j} (1 - p_k)
    probs = [0.3, 0.6]
    ratio = hyperlink_delivery_ratio(probs)
    alt = [0.3 / ratio, 0.6 * 0.3 / ratio]
    assert abs(sum(alt) - 1.0) > 0.1
    assert sum(relay_weights(probs)) == pytest.approx(1.0, abs=1e-12)


# ---- remaining cost / anypath distance -------------------------------------------

def test_remaining_cost():
    assert remaining_cost([1.0], [0.0]) == 0.0
    assert remaining_cost([2 / 3, 1 / 3], [0.0, 3.0]) == pytest.approx(1.0)
    assert remaining_cost([5 / 9, 4 / 9], [0.0, 1.0]) == pytest.approx(4 / 9)
    with pytest.raises(ValueError, match="length"):
        remaining_cost([1.0], [0.0, 1.0])


def test_remaining_cost_ignores_unreachable_zero_weight_relay():
    assert remaining_cost([1.0, 0.0], [2.0, INF]) == 2.0


def test_anypath_distance_examples():
    assert anypath_distance([1.0], [0.0]) == 1.0
    assert anypath_distance([0.5], [0.0]) == 2.0
    assert anypath_distance([0.5, 0.8], [0.0, 1.0]) == pytest.approx(14 / 9, abs=1e-12)


@settings(max_examples=200)
@given(
    st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0.0, 20.0)), min_size=1, max_size=5),
    st.floats(0.01, 1.0),
)
def test_adding_closer_relay_never_hurts(relays, p_new):
    relays = sorted(relays, key=lambda r: r[1])
    ps, ds = [p for p, _ in relays], [d for _, d in relays]
    current = anypath_distance(ps, ds)
    d_new = max(ds)  # appended at lowest priority
    assume(d_new < current)
    assert anypath_distance(ps + [p_new], ds + [d_new]) <= current + 1e-12


# ---- SAF -----------------------------------------------------------------------

def test_saf_chain(chain3):
    table = shortest_anypath_first(chain3.true_probs, chain3)
    assert [table.distance(n) for n in (1, 2, 3)] == [2.0, 1.0, 0.0]
    assert [table.forwarding_set(n) for n in (1, 2, 3)] == [(2,), (3,), ()]


def test_saf_three_node(three_node):
    # every nonempty forwarding set for node 1, relays ordered by distance
    d2 = 1.0
    options = {
        (3,): anypath_distance([0.5], [0.0]),
        (2,): anypath_distance([0.8], [d2]),
        (3, 2): anypath_distance([0.5, 0.8], [0.0, d2]),
    }
    assert options[(3,)] == pytest.approx(2.0)
    assert options[(2,)] == pytest.approx(2.25)
    assert options[(3, 2)] == pytest.approx(14 / 9)
    table = shortest_anypath_first(three_node.true_probs, three_node)
    assert table.distance(1) == pytest.approx(min(options.values()), abs=1e-12)
    assert table.forwarding_set(1) == (3, 2)
    assert table.distance(2) == 1.0
    assert table.distance(3) == 0.0 and table.forwarding_set(3) == ()


def test_saf_length_check(three_node):
    with pytest.raises(ValueError):
        shortest_anypath_first([0.5], three_node)


def test_saf_skips_zero_probability_links():
    topo = parse_topology("nodes 3\nsource 1\ndest 3\nlink 1 3 0.0\nlink 1 2 0.5\nlink 2 3 1.0")
    table = shortest_anypath_first(topo.true_probs, topo)
    assert table.forwarding_set(1) == (2,)
    assert table.distance(1) == pytest.approx(3.0)


def test_saf_unreachable_node_is_infinite():
    topo = parse_topology("nodes 4\nsource 1\ndest 3\nlink 1 3 0.5\nlink 3 4 0.5")
    table = shortest_anypath_first(topo.true_probs, topo)
    assert table.distance(4) == INF
    assert table.forwarding_set(4) == ()


def test_saf_tie_break_by_node_id():
    topo = parse_topology(
        "nodes 4\nsource 1\ndest 4\nlink 1 3 0.5\nlink 1 2 0.5\nlink 2 4 1.0\nlink 3 4 1.0"
    )
    table = shortest_anypath_first(topo.true_probs, topo)
    assert table.forwarding_set(1) == (2, 3)


def assert_table_invariants(table, topo, probs):
    dest = topo.destination
    assert table.distance(dest) == 0.0 and table.forwarding_set(dest) == ()
    for n in topo.nodes:
        entry = table.entries[n]
        fs = entry.forwarding_set
        if n == dest:
            continue
        if entry.distance == INF:
            assert fs == ()
            continue
        assert fs
        for m in fs:
            assert probs[topo.link_index[n, m]] > 0
            assert table.distance(m) < entry.distance
        keys = [(table.distance(m), m) for m in fs]
        assert keys == sorted(keys)
        ps = [probs[topo.link_index[n, m]] for m in fs]
        recomputed = anypath_distance(ps, [table.distance(m) for m in fs])
        assert recomputed == pytest.approx(entry.distance, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_saf_matches_brute_force_small(seed):
    rng = np.random.default_rng(1000 + seed)
    topo = random_topology(int(rng.integers(2, 6)), rng, edge_prob=0.6)
    saf = shortest_anypath_first(topo.true_probs, topo)
    brute = brute_force_anypath(topo.true_probs, topo)
    for n in topo.nodes:
        a, b = saf.distance(n), brute.distance(n)
        assert (a == b == INF) or abs(a - b) <= 1e-9
    assert_table_invariants(saf, topo, topo.true_probs)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_saf_invariants_and_single_path_dominance(n, seed):
    topo = random_topology(n, np.random.default_rng(seed), edge_prob=0.4)
    table = shortest_anypath_first(topo.true_probs, topo)
    assert_table_invariants(table, topo, topo.true_probs)
    assert table.distance(topo.source) <= single_path_distance(topo.true_probs, topo) + 1e-9


def test_single_path_distance_matches_networkx(seven_node):
    g = nx.DiGraph()
    for l in seven_node.links:
        g.add_edge(l.src, l.dst, weight=1.0 / l.prob)
    expected = nx.dijkstra_path_length(g, seven_node.source, seven_node.destination)
    assert single_path_distance(seven_node.true_probs, seven_node) == pytest.approx(expected)


# ---- brute force oracle ---------------------------------------------------------

def test_brute_force_examples(three_node):
    assert brute_force_anypath(three_node.true_probs, three_node).distance(1) == pytest.approx(14 / 9)
    single = parse_topology("nodes 2\nsource 1\ndest 2\nlink 1 2 0.4")
    assert brute_force_anypath(single.true_probs, single).distance(1) == pytest.approx(2.5)
    cut = parse_topology("nodes 3\nsource 1\ndest 2\nlink 1 2 0.4\nlink 3 1 1.0")
    assert brute_force_anypath(cut.true_probs, cut).distance(3) == pytest.approx(3.5)
    # source disconnected under the probabilities passed in
    assert brute_force_anypath([0.0, 1.0], cut).distance(1) == INF


def test_brute_force_size_guard():
    topo = Topology(13, 1, 13, tuple(Link(i, i + 1, 1.0) for i in range(1, 13)))
    with pytest.raises(ValueError, match="limited"):
        brute_force_anypath(topo.true_probs, topo)


# ---- evaluate_table_cost ----------------------------------------------------------

def test_evaluate_genie_table_is_self_consistent(seven_node):
    table = shortest_anypath_first(seven_node.true_probs, seven_node)
    cost = evaluate_table_cost(table, seven_node.true_probs, seven_node)
    for n in seven_node.nodes:
        assert cost[n] == pytest.approx(table.distance(n), abs=1e-12)


def forced_table(three_node, fs1):
    base = shortest_anypath_first(three_node.true_probs, three_node)
    entries = dict(base.entries)
    entries[1] = ForwardingEntry(1, math.nan, fs1)
    return ForwardingTable(base.destination, entries)


def test_evaluate_forced_suboptimal_set(three_node):
    cost = evaluate_table_cost(forced_table(three_node, (2,)), three_node.true_probs, three_node)
    assert cost[1] == pytest.approx(1 / 0.8 + 1.0)


def test_evaluate_keeps_policy_priority_order(three_node):
    # node 2 placed ahead of the destination: w = [0.8, 0.1] / 0.9
    cost = evaluate_table_cost(forced_table(three_node, (2, 3)), three_node.true_probs, three_node)
    assert cost[1] == pytest.approx(1 / 0.9 + (0.8 / 0.9) * 1.0)


def test_evaluate_zero_true_probability_set_is_infinite():
    topo = parse_topology("nodes 3\nsource 1\ndest 3\nlink 1 2 0.0\nlink 1 3 0.5\nlink 2 3 1.0")
    table = shortest_anypath_first([0.9, 0.0, 1.0], topo)
    assert table.forwarding_set(1) == (2,)
    assert evaluate_table_cost(table, topo.true_probs, topo)[1] == INF


def test_evaluate_rejects_cycles():
    topo = parse_topology("nodes 3\nsource 1\ndest 3\nlink 1 2 0.5\nlink 2 1 0.5\nlink 2 3 0.5")
    entries = {
        1: ForwardingEntry(1, 1.0, (2,)),
        2: ForwardingEntry(2, 1.0, (1,)),
        3: ForwardingEntry(3, 0.0, ()),
    }
    with pytest.raises(ValueError, match="cycle"):
        evaluate_table_cost(ForwardingTable(3, entries), topo.true_probs, topo)
