"""Worst-case scaling benchmark: max ops per update against a full-rebuild baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .delayed import TauModel
from .gains import GainKind
from .maintainer import Maintainer
from .opcount import OpCounter
from .rules import ThresholdRule
from .streams import base_set, update_tail
from .tree import greedy_build

BENCH_FORMAT = "dyntree.bench/1"
DEFAULT_SIZES = (1024, 2048, 4096, 8192)
DEFAULT_GENERATORS = ("hot-leaf", "clusters", "checkerboard")
# Frozen acceptance constants for the scaling table.
RATIO_BOUND = 3.0
NAIVE_SEPARATION = 6.0


@dataclass
class BenchConfig:
    sizes: tuple = DEFAULT_SIZES
    gain: GainKind | None = None
    alpha: float = 0.3
    beta: float = 0.3
    epsilon: float = 0.1
    trials: int = 1
    seed: int = 0
    d: int = 2
    generators: tuple = DEFAULT_GENERATORS
    decimals: int = 6  # fine enough that distinct feature values grow with n
    naive_checkpoints: int = 3
    ratio_bound: float = RATIO_BOUND
    tau_model: TauModel = field(default_factory=TauModel)

    def updates_for(self, n: int) -> int:
        # enough requests for the root instance to finish at least once
        return math.ceil(self.epsilon * n / 2) + 16


def _naive_cost(rule, S) -> int:
    c = OpCounter()
    greedy_build(rule, S, counter=c)
    return c.ops


def run_one(cfg: BenchConfig, gen: str, n: int, trial: int) -> dict:
    seed = cfg.seed * 1_000_003 + trial * 7919 + n
    S = base_set(gen, n, d=cfg.d, seed=seed, decimals=cfg.decimals)
    rule = ThresholdRule.for_feasibility(cfg.gain, cfg.alpha)
    m = Maintainer(rule, cfg.epsilon, cfg.d, tau_model=cfg.tau_model, record_applies=False)
    m.bulk_load(S)
    reqs = update_tail(gen, S, cfg.updates_for(n), d=cfg.d, seed=seed + 1, decimals=cfg.decimals)
    stride = max(1, len(reqs) // max(1, cfg.naive_checkpoints))
    naive = 0
    for i, u in enumerate(reqs):
        m.apply(u)
        # one full rebuild of the current active set = the naive per-update cost
        if i % stride == 0 or i == len(reqs) - 1:
            naive = max(naive, _naive_cost(rule, m.active))
    ups = m.stats.updates
    return {
        "generator": gen,
        "n": n,
        "trial": trial,
        "updates": len(reqs),
        "max_ops": ups.max,
        "mean_ops": round(ups.total / max(1, len(reqs)), 3),
        "naive_ops": naive,
        "map_log_weighted_ops": round(m.counter.log_weighted_ops, 3),
        "height": m.height(),
        "rebuilds": len(m.stats.rebuilds),
        "budget_violations": len(m.stats.budget_violations),
    }


def bench_scaling(cfg: BenchConfig) -> dict:
    """Run every (generator, size, trial) cell and build the ratio table."""
    sizes = sorted(set(cfg.sizes))
    runs = [run_one(cfg, g, n, t) for g in cfg.generators for n in sizes for t in range(cfg.trials)]
    table = []
    summary = {}
    for g in cfg.generators:
        rows = []
        for n in sizes:
            cell = [r for r in runs if r["generator"] == g and r["n"] == n]
            rows.append({"generator": g, "n": n,
                         "max_ops": max(r["max_ops"] for r in cell),
                         "naive_ops": max(r["naive_ops"] for r in cell)})
        base, base_naive = rows[0]["max_ops"], rows[0]["naive_ops"]
        for row in rows:
            row["ratio"] = round(row["max_ops"] / base, 6)
            row["naive_ratio"] = round(row["naive_ops"] / base_naive, 6)
        table.extend(rows)
        summary[g] = {"ratio": rows[-1]["ratio"], "naive_ratio": rows[-1]["naive_ratio"],
                      "within_bound": rows[-1]["ratio"] <= cfg.ratio_bound}
    return {
        "format": BENCH_FORMAT,
        "config": {"sizes": sizes, "gain": cfg.gain.name, "alpha": cfg.alpha, "beta": cfg.beta,
                   "epsilon": cfg.epsilon, "trials": cfg.trials, "seed": cfg.seed, "d": cfg.d,
                   "generators": list(cfg.generators), "decimals": cfg.decimals,
                   "ratio_bound": cfg.ratio_bound,
                   "tau_model": {"C": cfg.tau_model.C, "c_f": cfg.tau_model.c_f,
                                 "floor_grains": cfg.tau_model.floor_grains,
                                 "headroom": cfg.tau_model.headroom}},
        "runs": runs,
        "table": table,
        "summary": summary,
        "passed": all(s["within_bound"] for s in summary.values())
                  and all(r["budget_violations"] == 0 for r in runs),
    }
