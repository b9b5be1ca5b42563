"""Command-line front end: ``validate``, ``run`` and ``summary``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .anypath import INF, shortest_anypath_first
from .experiment import (
    AGGREGATE_HEADER,
    TRACE_HEADER,
    ExperimentConfig,
    Policy,
    read_aggregate,
    read_trace,
    run_experiment,
    write_aggregate,
    write_trace,
)
from .learning import BudgetMode
from .topology import TopologyError, load_topology, max_out_degree

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _explore_cost(value: str):
    if value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsee-anypath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a topology file and print genie distances")
    v.add_argument("--topology", required=True, type=Path)

    r = sub.add_parser("run", help="run an experiment and write CSV traces")
    r.add_argument("--topology", required=True, type=Path)
    r.add_argument("--horizon", type=int, default=5000)
    r.add_argument("--epochs", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--policy", choices=[p.value for p in Policy], default="dsee")
    r.add_argument("--f-scale", type=float, default=1.0)
    r.add_argument("--budget-mode", choices=["per-link", "per-hyperlink"], default="per-link")
    r.add_argument("--epsilon", type=float, default=0.1)
    r.add_argument("--prior", type=float, nargs=2, default=[1.0, 1.0], metavar=("ALPHA", "BETA"))
    r.add_argument("--min-prob", type=float, default=0.001)
    r.add_argument("--retry-cap", type=int, default=1000)
    r.add_argument("--explore-cost", type=_explore_cost, default=None)
    r.add_argument("--output", type=Path, default=Path("out"))
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--per-epoch", action="store_true", help="also write per-slot traces of every epoch")

    s = sub.add_parser("summary", help="compare policies from CSV outputs")
    s.add_argument("csv", nargs="+", type=Path)
    s.add_argument("--plot-data", type=Path, help="write t vs mean time-averaged regret per input")
    return parser


def cmd_validate(args, out) -> int:
    try:
        topo = load_topology(args.topology)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except TopologyError as exc:
        print(f"{args.topology}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    table = shortest_anypath_first(topo.true_probs, topo)
    print(f"nodes: {topo.node_count}", file=out)
    print(f"links: {topo.link_count}", file=out)
    print(f"max out-degree: {max_out_degree(topo)}", file=out)
    print(f"source: {topo.source}  destination: {topo.destination}", file=out)
    print("node  distance      forwarding set", file=out)
    for n in topo.nodes:
        d = table.distance(n)
        ds = "inf" if d == INF else f"{d:.10f}"
        fs = " ".join(str(m) for m in table.forwarding_set(n)) or "-"
        print(f"{n:>4}  {ds:<12}  {fs}", file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        topo = load_topology(args.topology)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except TopologyError as exc:
        print(f"{args.topology}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        config = ExperimentConfig(
            topology=topo,
            horizon=args.horizon,
            epochs=args.epochs,
            base_seed=args.seed,
            policy=args.policy,
            f_scale=args.f_scale,
            budget_mode=BudgetMode(args.budget_mode.replace("-", "_")),
            epsilon=args.epsilon,
            prior=tuple(args.prior),
            min_prob=args.min_prob,
            retry_cap=args.retry_cap,
            explore_slot_cost=args.explore_cost,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    result = run_experiment(config, jobs=args.jobs, keep_epochs=args.per_epoch)
    args.output.mkdir(parents=True, exist_ok=True)
    agg_path = args.output / f"{args.policy}_aggregate.csv"
    write_aggregate(result.aggregate, agg_path)
    print(f"wrote {agg_path}", file=out)
    if args.per_epoch:
        trace_path = args.output / f"{args.policy}_epochs.csv"
        write_trace(result.traces, trace_path)
        print(f"wrote {trace_path}", file=out)

    agg = result.aggregate
    T = config.horizon
    print(f"policy {args.policy}, {config.epochs} epochs, horizon {T}", file=out)
    print(f"final cumulative regret R(T): {agg.mean_cum_regret[-1]:.6g} ± {agg.se_cum_regret[-1]:.3g}", file=out)
    print(f"time-averaged regret R(T)/T: {agg.mean_avg_regret[-1]:.6g} ± {agg.se_avg_regret[-1]:.3g}", file=out)
    print(f"exploration fraction: {result.explore_fraction:.4f}", file=out)
    if result.cap_hits:
        print(f"warning: {result.cap_hits} slots charged the infinite-cost cap", file=out)
    return EXIT_OK


def _summarize(path: Path) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        header = tuple(next(csv.reader(fh), ()))
    if header == TRACE_HEADER:
        traces = read_trace(path)
        T = traces[0].horizon
        if any(tr.horizon != T for tr in traces):
            raise ValueError(f"{path}: epochs have different horizons")
        cum = np.mean([tr.cum_regret[-1] for tr in traces])
        avg = np.mean([tr.avg_regret for tr in traces], axis=0)
        explore = np.mean([tr.explore.mean() for tr in traces])
        routed = np.concatenate([tr.delivered[~tr.explore] for tr in traces])
        delivery = float(routed.mean()) if routed.size else math.nan
        return dict(T=T, cum=float(cum), avg=float(avg[-1]), explore=float(explore),
                    delivery=delivery, curve=avg)
    if header == AGGREGATE_HEADER:
        agg = read_aggregate(path)
        return dict(T=int(agg.t[-1]), cum=float(agg.mean_cum_regret[-1]),
                    avg=float(agg.mean_avg_regret[-1]), explore=math.nan,
                    delivery=math.nan, curve=agg.mean_avg_regret)
    raise ValueError(f"{path}: header matches neither the trace nor the aggregate schema")


def _na(x: float, fmt: str) -> str:
    return "n/a" if math.isnan(x) else format(x, fmt)


def cmd_summary(args, out) -> int:
    try:
        rows = [(p.stem, _summarize(p)) for p in args.csv]
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    width = max(8, *(len(name) for name, _ in rows))
    print(f"{'input':<{width}}  {'T':>6}  {'R(T)':>12}  {'R(T)/T':>12}  {'explore':>8}  {'delivery':>8}", file=out)
    for name, s in rows:
        print(
            f"{name:<{width}}  {s['T']:>6}  {s['cum']:>12.6g}  {s['avg']:>12.6g}  "
            f"{_na(s['explore'], '.4f'):>8}  {_na(s['delivery'], '.4f'):>8}",
            file=out,
        )

    if args.plot_data:
        horizons = {s["T"] for _, s in rows}
        if len(horizons) != 1:
            print("error: --plot-data needs inputs with a common horizon", file=sys.stderr)
            return EXIT_INVALID
        T = horizons.pop()
        with open(args.plot_data, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *(name for name, _ in rows)])
            for k in range(T):
                w.writerow([k + 1, *(f"{s['curve'][k]:.9g}" for _, s in rows)])
        print(f"wrote {args.plot_data}", file=out)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "summary": cmd_summary}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
