"""Epoch runner, regret accounting against the genie, aggregation and CSV I/O.

Regret of an exploitation slot is the expected cost of the table the
policy actually used, evaluated under the true link probabilities, minus
the genie's optimal source distance. An exploration slot is charged
``max(0, explore_slot_cost - D_opt)`` where the default cost is one dummy
broadcast per node (``N``).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .anypath import (
    INF,
    ForwardingTable,
    evaluate_table_cost,
    shortest_anypath_first,
)
from .channel import DEFAULT_RETRY_CAP, make_rng, probe_mask, route_packet
from .learning import (
    BudgetMode,
    DseeState,
    LinkEstimator,
    Phase,
    dsee_step,
    egreedy_step,
    thompson_estimates,
)
from .topology import Topology

__all__ = [
    "Policy",
    "ExperimentConfig",
    "RegretTrace",
    "AggregateTrace",
    "ExperimentResult",
    "genie_cost",
    "slot_regret",
    "EpochSimulator",
    "run_epoch",
    "run_experiment",
    "aggregate",
    "write_trace",
    "read_trace",
    "write_aggregate",
    "read_aggregate",
    "TRACE_HEADER",
    "AGGREGATE_HEADER",
]

TRACE_HEADER = (
    "epoch",
    "t",
    "phase",
    "inst_regret",
    "cum_regret",
    "avg_regret",
    "transmissions",
    "delivered",
)
AGGREGATE_HEADER = ("t", "mean_cum_regret", "se_cum_regret", "mean_avg_regret", "se_avg_regret")

# Infinite evaluated cost is charged as INFINITE_COST_FACTOR * N.
INFINITE_COST_FACTOR = 100
# Cost gaps below this are rounding between equal-cost tables.
REGRET_TOL = 1e-12


class Policy(str, enum.Enum):
    DSEE = "dsee"
    GENIE = "genie"
    EGREEDY = "egreedy"
    THOMPSON = "thompson"


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology
    horizon: int = 5000
    epochs: int = 100
    base_seed: int = 0
    policy: Policy = Policy.DSEE
    f_scale: float = 1.0
    budget_mode: BudgetMode = BudgetMode.PER_LINK
    epsilon: float = 0.1
    prior: tuple[float, float] = (1.0, 1.0)
    min_prob: float = 1e-3
    retry_cap: int = DEFAULT_RETRY_CAP
    explore_slot_cost: float | None = None  # None: one broadcast per node

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        object.__setattr__(self, "budget_mode", BudgetMode(self.budget_mode))
        object.__setattr__(self, "prior", tuple(float(x) for x in self.prior))
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 < self.min_prob < 1.0:
            raise ValueError(f"min_prob must lie in (0, 1), got {self.min_prob}")
        if len(self.prior) != 2 or min(self.prior) < 0:
            raise ValueError(f"prior must be two nonnegative numbers, got {self.prior}")
        if self.policy is Policy.THOMPSON and min(self.prior) <= 0:
            raise ValueError("thompson policy needs strictly positive priors")
        if self.f_scale <= 0:
            raise ValueError(f"f_scale must be positive, got {self.f_scale}")
        if self.retry_cap < 1:
            raise ValueError(f"retry_cap must be >= 1, got {self.retry_cap}")
        if self.explore_slot_cost is not None and self.explore_slot_cost < 0:
            raise ValueError("explore_slot_cost must be nonnegative")

    @property
    def explore_cost(self) -> float:
        if self.explore_slot_cost is None:
            return float(self.topology.node_count)
        return float(self.explore_slot_cost)

    @property
    def infinite_cost_cap(self) -> float:
        return float(INFINITE_COST_FACTOR * self.topology.node_count)


@dataclass
class RegretTrace:
    """Per-slot record of one epoch. ``delivered`` is -1 on exploration slots."""

    epoch: int
    explore: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    avg_regret: np.ndarray
    transmissions: np.ndarray
    delivered: np.ndarray
    cap_hits: int = 0

    @property
    def horizon(self) -> int:
        return len(self.inst_regret)

    @classmethod
    def from_instantaneous(cls, epoch, explore, inst_regret, transmissions, delivered, cap_hits=0):
        inst = np.asarray(inst_regret, dtype=float)
        cum = np.cumsum(inst)
        return cls(
            epoch=epoch,
            explore=np.asarray(explore, dtype=bool),
            inst_regret=inst,
            cum_regret=cum,
            avg_regret=cum / np.arange(1, len(inst) + 1),
            transmissions=np.asarray(transmissions, dtype=np.int64),
            delivered=np.asarray(delivered, dtype=np.int8),
            cap_hits=cap_hits,
        )


@dataclass
class AggregateTrace:
    t: np.ndarray
    mean_cum_regret: np.ndarray
    se_cum_regret: np.ndarray
    mean_avg_regret: np.ndarray
    se_avg_regret: np.ndarray


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    aggregate: AggregateTrace
    traces: list[RegretTrace] | None = None
    cap_hits: int = 0
    explore_fraction: float = 0.0
    delivery_rate: float = field(default=math.nan)


def genie_cost(topo: Topology) -> float:
    """Optimal expected transmissions from the source under true probabilities."""
    table = shortest_anypath_first(topo.true_probs, topo)
    # same arithmetic path as policy tables, so the genie's own regret is exactly 0
    d = evaluate_table_cost(table, topo.true_probs, topo)[topo.source]
    if d == INF:
        raise ValueError("destination unreachable from source; regret is undefined")
    return d


def slot_regret(
    phase: Phase,
    table: ForwardingTable | None,
    topo: Topology,
    config: ExperimentConfig,
    d_opt: float | None = None,
) -> float:
    """Regret charged for one slot; ``table`` is ignored on exploration slots."""
    if d_opt is None:
        d_opt = genie_cost(topo)
    if Phase(phase) is Phase.EXPLORE:
        return max(0.0, config.explore_cost - d_opt)
    cost = evaluate_table_cost(table, topo.true_probs, topo)[topo.source]
    return _exploit_regret(cost, d_opt, config.infinite_cost_cap)


def _exploit_regret(cost: float, d_opt: float, cap: float) -> float:
    if cost == INF:
        return cap
    gap = cost - d_opt
    return gap if gap > REGRET_TOL else 0.0


class EpochSimulator:
    """One epoch, advanced a slot at a time.

    Owns the epoch's estimator, DSEE state and random streams (channel and
    policy streams are keyed separately, so the DSEE schedule never depends
    on channel draws).
    """

    def __init__(self, config: ExperimentConfig, epoch_index: int):
        self.config = config
        self.epoch = epoch_index
        topo = self.topology = config.topology
        self.channel_rng = make_rng(config.base_seed, epoch_index, 0)
        self.policy_rng = make_rng(config.base_seed, epoch_index, 1)
        self.estimator = LinkEstimator(topo, *config.prior, min_prob=config.min_prob)
        self.state = DseeState.for_topology(topo, config.f_scale, config.budget_mode)
        self.d_opt = genie_cost(topo)
        self.genie_table = shortest_anypath_first(topo.true_probs, topo)
        self.explore_regret = max(0.0, config.explore_cost - self.d_opt)
        self.cap_hits = 0
        self._cost_cache: dict = {}

    def next_phase(self) -> Phase:
        policy = self.config.policy
        if policy is Policy.DSEE:
            return dsee_step(self.state)
        if policy is Policy.EGREEDY:
            return egreedy_step(self.config.epsilon, self.policy_rng)
        return Phase.EXPLOIT

    def current_table(self) -> ForwardingTable:
        policy = self.config.policy
        if policy is Policy.GENIE:
            return self.genie_table
        if policy is Policy.THOMPSON:
            probs = thompson_estimates(self.estimator, self.policy_rng)
        else:
            probs = self.estimator.estimates()
        return shortest_anypath_first(probs, self.topology)

    def step(self) -> tuple[Phase, float, int, int]:
        """Play one slot; returns ``(phase, regret, transmissions, delivered)``.

        ``delivered`` is -1 on exploration slots.
        """
        topo = self.topology
        true_probs = topo.true_probs
        est = self.estimator
        phase = self.next_phase()
        if phase is Phase.EXPLORE:
            est.update_all(probe_mask(true_probs, self.channel_rng))
            return phase, self.explore_regret, topo.broadcaster_count, -1

        table = self.current_table()
        key = table.key()
        regret = self._cost_cache.get(key)
        if regret is None:
            cost = evaluate_table_cost(table, true_probs, topo)[topo.source]
            regret = _exploit_regret(cost, self.d_opt, self.config.infinite_cost_cap)
            self._cost_cache[key] = regret
        if regret == self.config.infinite_cost_cap:
            self.cap_hits += 1

        packet = route_packet(table, true_probs, topo, self.channel_rng, self.config.retry_cap)
        if self.config.policy is not Policy.GENIE:
            link_index, successes, trials = topo.link_index, est.successes, est.trials
            for outcome in packet.receptions:
                n = outcome.transmitter
                for m, ok in outcome.receivers:
                    i = link_index[n, m]
                    trials[i] += 1
                    if ok:
                        successes[i] += 1
        return phase, regret, packet.total_transmissions, int(packet.delivered)

    def run(self) -> RegretTrace:
        T = self.config.horizon
        explore = np.zeros(T, dtype=bool)
        inst = np.zeros(T)
        tx = np.zeros(T, dtype=np.int64)
        delivered = np.full(T, -1, dtype=np.int8)
        for k in range(T):
            phase, inst[k], tx[k], delivered[k] = self.step()
            explore[k] = phase is Phase.EXPLORE
        return RegretTrace.from_instantaneous(self.epoch, explore, inst, tx, delivered, self.cap_hits)


def run_epoch(config: ExperimentConfig, epoch_index: int) -> RegretTrace:
    """Simulate ``config.horizon`` slots; deterministic in ``(base_seed, epoch_index)``."""
    return EpochSimulator(config, epoch_index).run()


def _run_epoch_args(args):
    return run_epoch(*args)


def aggregate(traces: Sequence[RegretTrace]) -> AggregateTrace:
    """Per-slot mean and standard error across epochs (order-invariant)."""
    if not traces:
        raise ValueError("no traces to aggregate")
    traces = sorted(traces, key=lambda tr: tr.epoch)
    horizons = {tr.horizon for tr in traces}
    if len(horizons) != 1:
        raise ValueError(f"traces have different horizons: {sorted(horizons)}")
    cum = np.stack([tr.cum_regret for tr in traces])
    avg = np.stack([tr.avg_regret for tr in traces])
    n = len(traces)

    def se(x):
        if n < 2:
            return np.zeros(x.shape[1])
        return x.std(axis=0, ddof=1) / math.sqrt(n)

    return AggregateTrace(
        t=np.arange(1, cum.shape[1] + 1),
        mean_cum_regret=cum.mean(axis=0),
        se_cum_regret=se(cum),
        mean_avg_regret=avg.mean(axis=0),
        se_avg_regret=se(avg),
    )


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, keep_epochs: bool = False
) -> ExperimentResult:
    """Run every epoch (optionally in ``jobs`` worker processes) and aggregate.

    Results do not depend on ``jobs``: each epoch owns its random streams.
    """
    args = [(config, e) for e in range(config.epochs)]
    if jobs > 1 and config.epochs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_run_epoch_args, args))
    else:
        traces = [run_epoch(*a) for a in args]

    n_slots = sum(tr.horizon for tr in traces)
    n_explore = sum(int(tr.explore.sum()) for tr in traces)
    routed = np.concatenate([tr.delivered[~tr.explore] for tr in traces])
    return ExperimentResult(
        config=config,
        aggregate=aggregate(traces),
        traces=traces if keep_epochs else None,
        cap_hits=sum(tr.cap_hits for tr in traces),
        explore_fraction=n_explore / n_slots,
        delivery_rate=float(routed.mean()) if routed.size else math.nan,
    )


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _open_sink(sink):
    if isinstance(sink, (str, Path)):
        return open(sink, "w", encoding="utf-8", newline=""), True
    return sink, False


def _open_source(source):
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8", newline=""), True
    return source, False


def write_trace(traces: RegretTrace | Iterable[RegretTrace], sink: str | Path | IO[str]) -> None:
    if isinstance(traces, RegretTrace):
        traces = [traces]
    fh, owned = _open_sink(sink)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for tr in traces:
            for k in range(tr.horizon):
                is_explore = bool(tr.explore[k])
                w.writerow(
                    (
                        tr.epoch,
                        k + 1,
                        Phase.EXPLORE.value if is_explore else Phase.EXPLOIT.value,
                        _fmt(tr.inst_regret[k]),
                        _fmt(tr.cum_regret[k]),
                        _fmt(tr.avg_regret[k]),
                        int(tr.transmissions[k]),
                        "" if is_explore else int(tr.delivered[k]),
                    )
                )
    finally:
        if owned:
            fh.close()


def _check_header(header, expected, where):
    if tuple(header or ()) != expected:
        raise ValueError(f"{where}: header {header!r} does not match {','.join(expected)}")


def read_trace(source: str | Path | IO[str]) -> list[RegretTrace]:
    """Parse a per-epoch trace CSV back into traces (values at 9 significant digits)."""
    fh, owned = _open_source(source)
    try:
        reader = csv.reader(fh)
        _check_header(next(reader, None), TRACE_HEADER, "trace CSV")
        rows: dict[int, list[list[str]]] = {}
        for row in reader:
            if len(row) != len(TRACE_HEADER):
                raise ValueError(f"trace CSV: malformed row {row!r}")
            rows.setdefault(int(row[0]), []).append(row)
    finally:
        if owned:
            fh.close()

    traces = []
    for epoch, rs in rows.items():
        rs.sort(key=lambda r: int(r[1]))
        if [int(r[1]) for r in rs] != list(range(1, len(rs) + 1)):
            raise ValueError(f"trace CSV: epoch {epoch} slots are not 1..T")
        for r in rs:
            if r[2] not in (Phase.EXPLORE.value, Phase.EXPLOIT.value):
                raise ValueError(f"trace CSV: bad phase {r[2]!r}")
        traces.append(
            RegretTrace(
                epoch=epoch,
                explore=np.array([r[2] == Phase.EXPLORE.value for r in rs]),
                inst_regret=np.array([float(r[3]) for r in rs]),
                cum_regret=np.array([float(r[4]) for r in rs]),
                avg_regret=np.array([float(r[5]) for r in rs]),
                transmissions=np.array([int(r[6]) for r in rs], dtype=np.int64),
                delivered=np.array([int(r[7]) if r[7] != "" else -1 for r in rs], dtype=np.int8),
            )
        )
    if not traces:
        raise ValueError("trace CSV has no data rows")
    return traces


def write_aggregate(agg: AggregateTrace, sink: str | Path | IO[str]) -> None:
    fh, owned = _open_sink(sink)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for k in range(len(agg.t)):
            w.writerow(
                (
                    int(agg.t[k]),
                    _fmt(agg.mean_cum_regret[k]),
                    _fmt(agg.se_cum_regret[k]),
                    _fmt(agg.mean_avg_regret[k]),
                    _fmt(agg.se_avg_regret[k]),
                )
            )
    finally:
        if owned:
            fh.close()


def read_aggregate(source: str | Path | IO[str]) -> AggregateTrace:
    fh, owned = _open_source(source)
    try:
        reader = csv.reader(fh)
        _check_header(next(reader, None), AGGREGATE_HEADER, "aggregate CSV")
        rows = [r for r in reader]
    finally:
        if owned:
            fh.close()
    if not rows:
        raise ValueError("aggregate CSV has no data rows")
    cols = list(zip(*rows))
    return AggregateTrace(
        t=np.array([int(x) for x in cols[0]]),
        mean_cum_regret=np.array([float(x) for x in cols[1]]),
        se_cum_regret=np.array([float(x) for x in cols[2]]),
        mean_avg_regret=np.array([float(x) for x in cols[3]]),
        se_avg_regret=np.array([float(x) for x in cols[4]]),
    )


def trace_to_string(traces) -> str:
    buf = io.StringIO()
    write_trace(traces, buf)
    return buf.getvalue()
