"""Command-line entry point: ``graphpart <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .analysis import bound_diagnostics, disparity_analysis, write_disparity_csv
from .gcn import GcnModel, TrainConfig, head_train
from .graph import DatasetError, ingest_cora_content, load_dataset
from .metrics import macro_f1, micro_f1
from .partition import Partition, build_partition
from .selection import REPRESENTATIONS, STRATEGIES, load_selected, select_nodes

log = logging.getLogger("graphpart")


def _k_arg(value: str):
    if value == "auto":
        return value
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("k must be positive or 'auto'")
    return k


def _context(args, need_partition=True):
    g = load_dataset(args.data)
    partition = Partition.load(args.partition) if getattr(args, "partition", None) else None
    k = getattr(args, "k", "auto") if need_partition else 1
    if not need_partition and partition is None:
        partition = Partition(np.zeros(g.n, dtype=np.int64), 1, 0.0)
    return bench.prepare_context(g, k, args.row_normalize, partition)


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, hidden=args.hidden)


def cmd_ingest(args) -> int:
    g, skipped = ingest_cora_content(args.content, args.cites, args.out)
    print(f"n={g.n} edges={g.num_edges} d={g.d} classes={g.class_count} skipped_citations={skipped}")
    return 0


def cmd_partition(args) -> int:
    g = load_dataset(args.data)
    ctx = bench.prepare_context(g, partition=Partition(np.zeros(g.n, dtype=np.int64), 1, 0.0),
                                normalize_rows=args.row_normalize)
    part, dendro, curve = build_partition(g, ctx.aggregated, args.k, args.k_max)
    part.save(args.out)
    if curve is not None and args.curve:
        with open(args.curve, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "cost"])
            w.writerows((k, repr(c)) for k, c in curve)
    print(f"k={part.k} modularity={part.modularity:.6f} cnm_stop_k={dendro.cnm_stop_k}")
    return 0


def cmd_select(args) -> int:
    ctx = _context(args, need_partition=args.strategy in ("graphpart", "graphpartfar"))
    sel = select_nodes(ctx, args.strategy, args.budget, args.seed, args.representation, args.gamma,
                       _train_cfg(args))
    sel.save(args.out)
    print(f"wrote {len(sel.selected)} node ids to {args.out}")
    return 0


def cmd_train(args) -> int:
    ctx = _context(args, need_partition=False)
    train_ids = load_selected(args.train)
    model = ctx.train(train_ids, _train_cfg(args), args.seed)
    if args.out:
        model.save(args.out)
    g = ctx.graph
    pred = model.predict(ctx.s, ctx.x, ctx.sx)
    print(f"macro_f1={macro_f1(pred, g.labels, g.class_count):.4f} micro_f1={micro_f1(pred, g.labels):.4f}")
    return 0


def cmd_bench(args) -> int:
    g = load_dataset(args.data)
    cfg = bench.BenchConfig(
        strategies=tuple(args.strategies), budgets=tuple(args.budgets), n_seeds=args.seeds,
        representation=args.representation, k=args.k, reference=args.reference, gamma=args.gamma,
        eval_on=args.eval_on, train=_train_cfg(args), timing=not args.no_timing, threads=args.threads)
    ctx = bench.prepare_context(g, args.k, args.row_normalize)
    log.info("partition: k=%d modularity=%.4f", ctx.partition.k, ctx.partition.modularity)
    report = bench.run_bench(ctx, cfg)
    bench.write_report(report, args.out_dir)
    for a in report.aggregates():
        print(f"{a['strategy']:>13} b={a['budget']:<5} macro_f1={a['mean_macro_f1']:.4f} "
              f"+- {a['stderr_macro_f1']:.4f}")
    if report.failures:
        print(f"{len(report.failures)} cell(s) failed; see errors.csv", file=sys.stderr)
        return 2
    return 0


def cmd_disparity(args) -> int:
    ctx = _context(args, need_partition=False)
    train_ids = load_selected(args.train)
    model = GcnModel.load(args.model) if args.model else ctx.train(train_ids, _train_cfg(args), args.seed)
    pred = model.predict(ctx.s, ctx.x, ctx.sx)
    table = disparity_analysis(pred, ctx.graph.labels, ctx.aggregated, train_ids, args.bins)
    write_disparity_csv(table, args.out)
    for b in table:
        print(f"bin {b.index}: dist [{b.lo:.4f}, {b.hi:.4f}] n={b.count} acc={b.accuracy:.4f}")
    return 0


def cmd_bounds(args) -> int:
    ctx = _context(args)
    g = ctx.graph
    train_ids = load_selected(args.train)
    head = head_train(ctx.aggregated, train_ids, g.labels, g.class_count, _train_cfg(args), args.seed)
    diag = bound_diagnostics(head, ctx.aggregated, ctx.partition, train_ids, check=False)
    diag.write_csv(args.out)
    print(f"delta_h={diag.delta_h:.4f} covered={int(diag.covered.sum())}/{len(diag.nodes)} "
          f"violations={diag.violations}")
    return 1 if diag.violations else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphpart", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, partition=True):
        sp.add_argument("--data", required=True, help="generic dataset dir or raw .content file/dir")
        sp.add_argument("--row-normalize", action="store_true", help="L1-normalize feature rows first")
        if partition:
            sp.add_argument("--k", type=_k_arg, default="auto")
            sp.add_argument("--partition", help="partitions.json to reuse")

    def train_args(sp):
        sp.add_argument("--epochs", type=int, default=300)
        sp.add_argument("--hidden", type=int, default=16)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("ingest", help="convert raw .content/.cites files to the generic format")
    sp.add_argument("--content", required=True)
    sp.add_argument("--cites", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("partition", help="CNM partition with elbow-selected K")
    data_args(sp, partition=False)
    sp.add_argument("--k", type=_k_arg, default="auto")
    sp.add_argument("--k-max", type=int, default=None)
    sp.add_argument("--out", default="partitions.json")
    sp.add_argument("--curve", help="optional CSV for the elbow cost curve")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("select", help="run one query strategy")
    data_args(sp)
    train_args(sp)
    sp.add_argument("--strategy", choices=STRATEGIES, required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--representation", choices=REPRESENTATIONS, default="aggregation")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--out", default="selected.txt")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("train", help="train the GCN on selected nodes and report F1")
    data_args(sp, partition=False)
    train_args(sp)
    sp.add_argument("--train", required=True, help="selected.txt")
    sp.add_argument("--out", default="model.json")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("bench", help="budget sweep over strategies and seeds")
    data_args(sp)
    sp.add_argument("--strategies", nargs="+", choices=STRATEGIES, default=["random", "featprop", "graphpart"])
    sp.add_argument("--budgets", nargs="+", type=int, default=list(bench.SMALL_BUDGETS))
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--representation", choices=REPRESENTATIONS, default="aggregation")
    sp.add_argument("--reference", default="graphpart")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--eval-on", choices=("all", "test"), default="all")
    sp.add_argument("--epochs", type=int, default=300)
    sp.add_argument("--hidden", type=int, default=16)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for byte-stable output")
    sp.add_argument("--out-dir", default="bench_out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("disparity", help="accuracy by distance-to-training-set bins")
    data_args(sp, partition=False)
    train_args(sp)
    sp.add_argument("--train", required=True)
    sp.add_argument("--model", help="model.json; trained from --train if omitted")
    sp.add_argument("--bins", type=int, default=10)
    sp.add_argument("--out", default="disparity.csv")
    sp.set_defaults(func=cmd_disparity)

    sp = sub.add_parser("bounds", help="per-node coverage bound diagnostics for an MLP head on S^2 X")
    data_args(sp)
    train_args(sp)
    sp.add_argument("--train", required=True)
    sp.add_argument("--out", default="bounds.csv")
    sp.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
