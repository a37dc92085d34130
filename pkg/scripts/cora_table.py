"""Budget sweep over every strategy on one dataset (Cora by default).

Writes results.csv and summary.csv to --out-dir and prints a
Macro-F1 table (mean +- standard error, x100) with the paired t-test
p-value against GraphPart.
"""

import argparse
import logging
import sys

from graphpart import bench
from graphpart.graph import find_dataset, load_dataset
from graphpart.selection import STRATEGIES


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dataset", default="cora")
    p.add_argument("--strategies", nargs="+", default=list(STRATEGIES))
    p.add_argument("--budgets", nargs="+", type=int, default=list(bench.SMALL_BUDGETS))
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--k", default="auto")
    p.add_argument("--out-dir", default="out/cora_table")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    path = find_dataset(args.dataset)
    if path is None:
        print(f"dataset {args.dataset!r} not found; see scripts/fetch_cora.py", file=sys.stderr)
        return 1
    g = load_dataset(path)
    k = args.k if args.k == "auto" else int(args.k)
    ctx = bench.prepare_context(g, k)
    cfg = bench.BenchConfig(strategies=tuple(args.strategies), budgets=tuple(args.budgets), n_seeds=args.seeds, k=k)
    report = bench.run_bench(ctx, cfg)
    bench.write_report(report, args.out_dir)

    print(f"{g.name}: n={g.n} K={ctx.partition.k} Q={ctx.partition.modularity:.3f}")
    cells = {(a["strategy"], a["budget"]): a for a in report.aggregates()}
    print("strategy".ljust(14) + "".join(f"b={b}".rjust(18) for b in args.budgets))
    for s in args.strategies:
        row = s.ljust(14)
        for b in args.budgets:
            a = cells[(s, b)]
            mark = "" if s == "graphpart" or not a["p_vs_reference"] < 0.05 else "*"
            row += f"{100 * a['mean_macro_f1']:.1f}+-{100 * a['stderr_macro_f1']:.1f}{mark}".rjust(18)
        print(row)
    print("* significantly different from graphpart (paired t-test, p < 0.05)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
