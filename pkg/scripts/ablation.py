"""Distance-space ablation: aggregated features S^2 X, GCN embeddings from a
model trained on a random third of the budget, or raw features X, each with
and without graph partitioning (GraphPart vs FeatProp)."""

import argparse
import sys

import numpy as np

from graphpart import bench
from graphpart.gcn import TrainConfig
from graphpart.graph import find_dataset, load_dataset
from graphpart.selection import REPRESENTATIONS, select_nodes


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dataset", default="cora")
    p.add_argument("--budgets", nargs="+", type=int, default=[20, 40, 80])
    p.add_argument("--seeds", type=int, default=10)
    args = p.parse_args(argv)
    path = find_dataset(args.dataset)
    if path is None:
        print(f"dataset {args.dataset!r} not found", file=sys.stderr)
        return 1
    ctx = bench.prepare_context(load_dataset(path))
    cfg = TrainConfig()
    print("representation  partition" + "".join(f"b={b}".rjust(10) for b in args.budgets))
    for rep in REPRESENTATIONS:
        for strategy, label in (("featprop", "no"), ("graphpart", "yes")):
            row = f"{rep:<16}{label:<10}"
            for b in args.budgets:
                scores = []
                for seed in range(args.seeds):
                    sel = select_nodes(ctx, strategy, b, seed, rep, cfg=cfg)
                    scores.append(bench.evaluate(ctx, sel.selected, cfg, seed)[0])
                row += f"{100 * np.mean(scores):.1f}".rjust(10)
            print(row, flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
