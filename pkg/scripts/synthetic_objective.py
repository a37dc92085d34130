"""Coverage objective of GraphPart, GraphPartFar, FeatProp and Random on
planted-cluster graphs: how often each beats Random and by how much."""

import argparse

import numpy as np

from graphpart.partition import build_partition
from graphpart.selection import (GraphContext, featprop_select, graphpart_select, graphpartfar_select,
                                 objective_eval, random_select)
from graphpart.synthetic import planted_partition


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--graphs", type=int, default=100)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--budget", type=int, default=8)
    args = p.parse_args(argv)
    methods = {
        "graphpart": lambda f, part, s: graphpart_select(f, part, args.budget, rng=s),
        "graphpartfar": lambda f, part, s: graphpartfar_select(f, part, args.budget, rng=s),
        "featprop": lambda f, part, s: featprop_select(f, args.budget, rng=s),
    }
    wins = {m: 0 for m in methods}
    ratio = {m: [] for m in methods}
    ks = []
    for seed in range(args.graphs):
        g = planted_partition(n=args.n, clusters=args.clusters, seed=seed)
        ctx = GraphContext.build(g)
        part, _, _ = build_partition(g, ctx.aggregated)
        ks.append(part.k)
        base = objective_eval(ctx.aggregated, part, random_select(g.n, args.budget, rng=seed).selected)
        for m, fn in methods.items():
            val = objective_eval(ctx.aggregated, part, fn(ctx.aggregated, part, seed).selected)
            wins[m] += val <= base
            ratio[m].append(val / base)
    print(f"{args.graphs} graphs, median elbow K = {int(np.median(ks))}")
    for m in methods:
        print(f"{m:<13} beats random in {wins[m]:>3}/{args.graphs}; mean objective ratio {np.mean(ratio[m]):.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
