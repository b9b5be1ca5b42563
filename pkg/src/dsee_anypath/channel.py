"""Slotted broadcast channel with independent Bernoulli link receptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .anypath import ForwardingTable
from .topology import Link, Topology

__all__ = [
    "DEFAULT_RETRY_CAP",
    "ReceptionOutcome",
    "PacketTrace",
    "sample_link",
    "broadcast",
    "route_packet",
    "probe_all_links",
    "probe_mask",
    "make_rng",
]

DEFAULT_RETRY_CAP = 1000


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) stream keyed by ``seed`` and an integer path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class ReceptionOutcome:
    transmitter: int
    receivers: tuple[tuple[int, bool], ...]

    def first_receiver(self) -> int | None:
        for node, ok in self.receivers:
            if ok:
                return node
        return None


@dataclass
class PacketTrace:
    """One packet's journey. ``receptions`` holds every broadcast's outcome,
    which is what the link estimator learns from."""

    hops: list[tuple[int, int]] = field(default_factory=list)
    delivered: bool = False
    total_transmissions: int = 0
    receptions: list[ReceptionOutcome] = field(default_factory=list)


def sample_link(p: float, rng: np.random.Generator) -> bool:
    return bool(rng.random() < p)


def broadcast(
    transmitter: int,
    targets: Sequence[int],
    probs: Sequence[float],
    topo: Topology,
    rng: np.random.Generator,
) -> ReceptionOutcome:
    """One transmission heard independently by each target."""
    if len(targets) == 0:
        raise ValueError("broadcast needs at least one target")
    ps = []
    for t in targets:
        try:
            ps.append(probs[topo.link_index[transmitter, t]])
        except KeyError:
            raise ValueError(f"no link {transmitter}->{t}") from None
    heard = rng.random(len(ps)) < ps
    return ReceptionOutcome(transmitter, tuple(zip(targets, heard.tolist())))


def route_packet(
    table: ForwardingTable,
    probs: Sequence[float],
    topo: Topology,
    rng: np.random.Generator,
    retry_cap: int = DEFAULT_RETRY_CAP,
) -> PacketTrace:
    """Forward one packet from the source along ``table`` over the true channel.

    Each hop re-broadcasts until some forwarding-set member hears it; the
    highest-priority receiver carries on and the others drop their copy. A
    hop that needs ``retry_cap`` broadcasts without success ends the packet
    undelivered.
    """
    if retry_cap < 1:
        raise ValueError("retry_cap must be positive")
    if hasattr(probs, "tolist"):
        probs = probs.tolist()
    trace = PacketTrace()
    node = topo.source
    while node != table.destination:
        fs = table.forwarding_set(node)
        if not fs:
            raise ValueError(f"node {node} has an empty forwarding set")
        attempts = 0
        relay = None
        while relay is None and attempts < retry_cap:
            outcome = broadcast(node, fs, probs, topo, rng)
            attempts += 1
            trace.receptions.append(outcome)
            relay = outcome.first_receiver()
        trace.hops.append((node, attempts))
        trace.total_transmissions += attempts
        if relay is None:
            return trace
        node = relay
    trace.delivered = True
    return trace


def probe_all_links(
    topo: Topology, probs: Sequence[float], rng: np.random.Generator
) -> list[tuple[Link, bool]]:
    """Every node broadcasts one dummy packet; each directed link is sampled once.

    Costs ``topo.broadcaster_count`` transmissions.
    """
    return list(zip(topo.links, probe_mask(probs, rng).tolist()))


def probe_mask(probs: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Boolean reception per link for one probe round, aligned with ``probs``."""
    return rng.random(len(probs)) < np.asarray(probs, dtype=float)
