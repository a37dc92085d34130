"""Budget-sweep experiments: strategies x budgets x seeds on one dataset."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gcn import TrainConfig
from .graph import AttributedGraph, row_normalize
from .metrics import macro_f1, micro_f1
from .partition import Partition, build_partition
from .selection import GraphContext, select_nodes
from .stats import paired_t_test

logger = logging.getLogger(__name__)

SMALL_BUDGETS = (10, 20, 40, 80, 160)
LARGE_BUDGETS = (80, 160, 320, 640, 1280)
RESULT_COLUMNS = ("dataset", "strategy", "representation", "budget", "seed", "macro_f1", "micro_f1", "wall_time_s")
SUMMARY_COLUMNS = ("strategy", "budget", "mean_macro_f1", "stderr_macro_f1", "p_vs_reference")


@dataclass(frozen=True)
class BenchConfig:
    strategies: tuple[str, ...] = ("random", "featprop", "graphpart")
    budgets: tuple[int, ...] = SMALL_BUDGETS
    n_seeds: int = 10
    representation: str = "aggregation"
    k: int | str = "auto"
    reference: str = "graphpart"
    gamma: float | None = None
    eval_on: str = "all"  # "all" nodes or "test" (non-training) nodes
    train: TrainConfig = field(default_factory=TrainConfig)
    timing: bool = True
    threads: int | None = None


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    strategy: str
    representation: str
    budget: int
    seed: int
    macro_f1: float
    micro_f1: float
    wall_time_s: float
    error: str = ""
    selected: tuple = field(default=(), repr=False, compare=False)

    def as_csv(self) -> list[str]:
        return [self.dataset, self.strategy, self.representation, str(self.budget), str(self.seed),
                _fmt(self.macro_f1), _fmt(self.micro_f1), _fmt(self.wall_time_s)]


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class ExperimentReport:
    rows: list[ResultRow]
    reference: str = "graphpart"

    def scores(self, strategy: str, budget: int) -> dict[int, float]:
        return {r.seed: r.macro_f1 for r in self.rows
                if r.strategy == strategy and r.budget == budget and not r.error}

    def aggregates(self) -> list[dict]:
        """Mean and standard error of Macro-F1 per (strategy, budget), with
        the paired t-test p-value against the reference strategy."""
        keys = sorted({(r.strategy, r.budget) for r in self.rows})
        out = []
        for strategy, budget in keys:
            scores = self.scores(strategy, budget)
            vals = np.array(list(scores.values()), dtype=np.float64)
            mean = float(vals.mean()) if vals.size else math.nan
            stderr = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
            p = math.nan
            ref = self.scores(self.reference, budget)
            common = sorted(set(scores) & set(ref))
            if strategy != self.reference and len(common) >= 2:
                p = paired_t_test([scores[s] for s in common], [ref[s] for s in common]).pvalue
            out.append({"strategy": strategy, "budget": budget, "mean_macro_f1": mean,
                        "stderr_macro_f1": stderr, "p_vs_reference": p})
        return out

    def write_results(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for r in self.rows:
                w.writerow(r.as_csv())

    def write_summary(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for a in self.aggregates():
                p = "" if a["strategy"] == self.reference else _fmt(a["p_vs_reference"])
                w.writerow([a["strategy"], a["budget"], _fmt(a["mean_macro_f1"]), _fmt(a["stderr_macro_f1"]), p])

    @property
    def failures(self) -> list[ResultRow]:
        return [r for r in self.rows if r.error]


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def prepare_context(g: AttributedGraph, k="auto", normalize_rows: bool = False,
                    partition: Partition | None = None, hops: int = 2) -> GraphContext:
    """Propagated features plus the shared partition for one dataset."""
    x = row_normalize(g.features) if normalize_rows else g.features
    ctx = GraphContext.build(g, x, hops=hops)
    if partition is None and g.num_edges > 0:
        partition, _, _ = build_partition(g, ctx.aggregated, k)
    ctx.partition = partition
    return ctx


def evaluate(ctx: GraphContext, train_ids, cfg: TrainConfig, seed: int, eval_on: str = "all"):
    """Train on ``train_ids`` and score Macro/Micro-F1 on all nodes (or the
    complement of the training set)."""
    g = ctx.graph
    model = ctx.train(train_ids, cfg, seed)
    pred = model.predict(ctx.s, ctx.x, ctx.sx)
    nodes = np.arange(g.n)
    if eval_on == "test":
        nodes = np.setdiff1d(nodes, train_ids)
    return (macro_f1(pred[nodes], g.labels[nodes], g.class_count),
            micro_f1(pred[nodes], g.labels[nodes]), model)


def run_cell(ctx: GraphContext, strategy: str, budget: int, seed: int, cfg: BenchConfig) -> ResultRow:
    g = ctx.graph
    start = time.perf_counter()
    try:
        sel = select_nodes(ctx, strategy, budget, seed, cfg.representation, cfg.gamma, cfg.train)
        macro, micro, _ = evaluate(ctx, sel.selected, cfg.train, seed, cfg.eval_on)
        error = ""
        selected = tuple(sel.selected)
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
        logger.error("cell %s/b=%d/seed=%d failed: %s", strategy, budget, seed, exc)
        macro = micro = math.nan
        error = f"{type(exc).__name__}: {exc}"
        selected = ()
    elapsed = time.perf_counter() - start if cfg.timing else 0.0
    return ResultRow(g.name, strategy, cfg.representation, budget, seed, macro, micro, elapsed, error, selected)


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("GAL_THREADS")
    if requested is None and env:
        requested = int(env)
    cap = requested or os.cpu_count() or 1
    return max(1, cap)


def run_bench(ctx: GraphContext, cfg: BenchConfig) -> ExperimentReport:
    """Every (strategy, budget, seed) cell against one shared partition.

    Rows come back sorted by (strategy, budget, seed) whatever the pool size.
    """
    cells = [(s, b, seed) for s in cfg.strategies for b in cfg.budgets for seed in range(cfg.n_seeds)]
    workers = worker_count(cfg.threads)
    if workers == 1:
        rows = [run_cell(ctx, *cell, cfg) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: run_cell(ctx, *c, cfg), cells))
    order = {s: i for i, s in enumerate(cfg.strategies)}
    rows.sort(key=lambda r: (order[r.strategy], r.budget, r.seed))
    return ExperimentReport(rows, cfg.reference)


def write_report(report: ExperimentReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_results(out / "results.csv")
    report.write_summary(out / "summary.csv")
    if report.failures:
        with open(out / "errors.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strategy", "budget", "seed", "error"])
            for r in report.failures:
                w.writerow([r.strategy, r.budget, r.seed, r.error])
    return out
