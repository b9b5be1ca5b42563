"""Mesh network model: directed links with per-link delivery probabilities.

Topology files are line based::

    # comment
    nodes 3
    source 1
    dest 3
    link 1 2 0.8
    link 2 3 1.0
    link 1 3 0.5

Node ids are 1-based. Links are directed, so a bidirectional radio link is
written as two ``link`` lines.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "Link",
    "Topology",
    "TopologyError",
    "NodeNeighborhood",
    "parse_topology",
    "load_topology",
    "serialize_topology",
    "max_out_degree",
    "neighbors",
    "random_topology",
    "bundled_topology",
    "bundled_topology_path",
    "BUNDLED_TOPOLOGIES",
]

BUNDLED_TOPOLOGIES = ("three_node", "seven_node")


class TopologyError(ValueError):
    """Invalid topology text or structure. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Link(NamedTuple):
    src: int
    dst: int
    prob: float


@dataclass(frozen=True)
class NodeNeighborhood:
    node: int
    out_neighbors: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class Topology:
    """Immutable directed mesh with true link delivery probabilities.

    ``links`` is stored sorted by ``(src, dst)``; every per-link array used
    elsewhere in the package (estimates, counters) is aligned with it.
    """

    node_count: int
    source: int
    destination: int
    links: tuple[Link, ...] = field(default=())

    def __post_init__(self):
        n = self.node_count
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise TopologyError(f"node count must be a positive integer, got {n!r}")
        for role, node in (("source", self.source), ("destination", self.destination)):
            if not 1 <= node <= n:
                raise TopologyError(f"{role} {node} outside 1..{n}")
        if self.source == self.destination:
            raise TopologyError("source and destination must differ")

        links = []
        seen = set()
        for link in self.links:
            src, dst, prob = int(link[0]), int(link[1]), float(link[2])
            if not (1 <= src <= n and 1 <= dst <= n):
                raise TopologyError(f"link {src}->{dst} has node id outside 1..{n}")
            if src == dst:
                raise TopologyError(f"self-link on node {src}")
            if (src, dst) in seen:
                raise TopologyError(f"duplicate link {src}->{dst}")
            if not 0.0 <= prob <= 1.0:
                raise TopologyError(f"link {src}->{dst} prob {prob} outside [0, 1]")
            seen.add((src, dst))
            links.append(Link(src, dst, prob))
        links.sort(key=lambda l: (l.src, l.dst))
        object.__setattr__(self, "links", tuple(links))

        if not self._reachable(self.source, self.destination):
            raise TopologyError(
                f"destination {self.destination} unreachable from source {self.source} "
                "over links with prob > 0"
            )

    def _reachable(self, start: int, goal: int) -> bool:
        adj: dict[int, list[int]] = {}
        for l in self.links:
            if l.prob > 0:
                adj.setdefault(l.src, []).append(l.dst)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            if u == goal:
                return True
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return False

    @property
    def nodes(self) -> range:
        return range(1, self.node_count + 1)

    @property
    def link_count(self) -> int:
        return len(self.links)

    @cached_property
    def link_index(self) -> dict[tuple[int, int], int]:
        return {(l.src, l.dst): i for i, l in enumerate(self.links)}

    @cached_property
    def out_links(self) -> dict[int, tuple[int, ...]]:
        """Link indices leaving each node, ascending by neighbor id."""
        out: dict[int, list[int]] = {n: [] for n in self.nodes}
        for i, l in enumerate(self.links):
            out[l.src].append(i)
        return {n: tuple(v) for n, v in out.items()}

    @cached_property
    def in_links(self) -> dict[int, tuple[int, ...]]:
        inc: dict[int, list[int]] = {n: [] for n in self.nodes}
        for i, l in enumerate(self.links):
            inc[l.dst].append(i)
        return {n: tuple(v) for n, v in inc.items()}

    @cached_property
    def true_probs(self) -> np.ndarray:
        arr = np.array([l.prob for l in self.links], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def broadcaster_count(self) -> int:
        """Nodes with at least one out-link; one dummy broadcast each per probe round."""
        return sum(1 for n in self.nodes if self.out_links[n])


def _parse_int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise TopologyError(f"expected integer {what}, got {token!r}", lineno) from None


def parse_topology(text: str | Iterable[str]) -> Topology:
    """Parse the line-based topology format. Errors carry the offending line number."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header: dict[str, int] = {}
    links: list[Link] = []
    seen_links: dict[tuple[int, int], int] = {}
    n = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        directive, args = parts[0], parts[1:]

        if n is None and directive != "nodes":
            raise TopologyError("'nodes' must be the first directive", lineno)

        if directive in ("nodes", "source", "dest"):
            if len(args) != 1:
                raise TopologyError(f"'{directive}' takes exactly one argument", lineno)
            if directive in header:
                raise TopologyError(f"'{directive}' given more than once", lineno)
            value = _parse_int(args[0], directive, lineno)
            if directive == "nodes":
                if value < 1:
                    raise TopologyError("node count must be positive", lineno)
                n = value
            elif not 1 <= value <= n:
                raise TopologyError(f"{directive} {value} outside 1..{n}", lineno)
            header[directive] = value
        elif directive == "link":
            if len(args) != 3:
                raise TopologyError("'link' takes <from> <to> <prob>", lineno)
            src = _parse_int(args[0], "from", lineno)
            dst = _parse_int(args[1], "to", lineno)
            try:
                prob = float(args[2])
            except ValueError:
                raise TopologyError(f"bad probability {args[2]!r}", lineno) from None
            if not (1 <= src <= n and 1 <= dst <= n):
                raise TopologyError(f"link {src}->{dst} has node id outside 1..{n}", lineno)
            if src == dst:
                raise TopologyError(f"self-link on node {src}", lineno)
            if (src, dst) in seen_links:
                raise TopologyError(
                    f"duplicate link {src}->{dst} (first on line {seen_links[src, dst]})", lineno
                )
            if not 0.0 <= prob <= 1.0:
                raise TopologyError(f"prob {prob} outside [0, 1]", lineno)
            seen_links[src, dst] = lineno
            links.append(Link(src, dst, prob))
        else:
            raise TopologyError(f"unknown directive {directive!r}", lineno)

    for key in ("nodes", "source", "dest"):
        if key not in header:
            raise TopologyError(f"missing '{key}' directive")
    return Topology(header["nodes"], header["source"], header["dest"], tuple(links))


def load_topology(path: str | Path) -> Topology:
    return parse_topology(Path(path).read_text(encoding="utf-8"))


def serialize_topology(topo: Topology) -> str:
    """Canonical text form; ``parse_topology(serialize_topology(t)) == t``."""
    out = [f"nodes {topo.node_count}", f"source {topo.source}", f"dest {topo.destination}"]
    out += [f"link {l.src} {l.dst} {l.prob!r}" for l in topo.links]
    return "\n".join(out) + "\n"


def max_out_degree(topo: Topology) -> int:
    return max(len(v) for v in topo.out_links.values())


def neighbors(topo: Topology, node: int) -> NodeNeighborhood:
    if node not in topo.out_links:
        raise TopologyError(f"unknown node id {node}")
    return NodeNeighborhood(
        node, tuple((topo.links[i].dst, topo.links[i].prob) for i in topo.out_links[node])
    )


def random_topology(
    node_count: int,
    rng: np.random.Generator,
    edge_prob: float = 0.5,
    prob_range: tuple[float, float] = (0.1, 1.0),
    max_tries: int = 1000,
) -> Topology:
    """Random directed topology (source 1, destination N) with dest reachable.

    Each ordered pair gets a link with probability ``edge_prob``; delivery
    probabilities are uniform on ``prob_range``. Resamples until valid.
    """
    lo, hi = prob_range
    for _ in range(max_tries):
        links = []
        for u in range(1, node_count + 1):
            for v in range(1, node_count + 1):
                if u != v and rng.random() < edge_prob:
                    links.append(Link(u, v, float(rng.uniform(lo, hi))))
        try:
            return Topology(node_count, 1, node_count, tuple(links))
        except TopologyError:
            continue
    raise RuntimeError("could not draw a connected topology; raise edge_prob")


def bundled_topology_path(name: str) -> Path:
    if name not in BUNDLED_TOPOLOGIES:
        raise KeyError(f"unknown bundled topology {name!r}; choose from {BUNDLED_TOPOLOGIES}")
    return Path(str(resources.files("dsee_anypath") / "data" / f"{name}.topo"))


def bundled_topology(name: str) -> Topology:
    return load_topology(bundled_topology_path(name))
