"""Optimality-ratio, running-time and speedup experiments.

The ratio for an algorithm at a given K is its mean final distortion over
trials divided by the best distortion any compared algorithm reached at that
K.  A ratio near 1 means the algorithm reliably finds the empirical optimum.
"""
from __future__ import annotations

import json
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .core import ClusteringError, Dataset, TerminationConfig
from .dkm import run_dkm
from .ikm import run_ikm
from .ingest import atomic_write, fmt
from .lloyd import run_km
from .twophase import run_par2pk

DETERMINISTIC = {"ikm": run_ikm, "dkm": run_dkm}
ALGORITHMS = ("km", "ikm", "dkm")

RATIOS_HEADER = "dataset,K,algorithm,i_avg,i_min_global,ratio"
TIMES_HEADER = "dataset,K,algorithm,median_ms,learn_calls"
SPEEDUP_HEADER = "dataset,workers,median_ms,speedup"

# published reference speedups of a cluster deployment, keyed by data set size
PUBLISHED_SPEEDUP = {
    "87.6MB": {1: 1.0, 2: 1.95, 4: 3.75, 8: 6.98},
    "1.23GB": {1: 1.0, 2: 1.99, 4: 3.96, 8: 7.77},
}


@dataclass
class TrialStats:
    algorithm_tag: str
    k: int
    trials: int
    i_avg: float
    i_min_local: float
    times: list[float]
    distortions: list[float] = field(repr=False)
    learn_calls: int = 0

    @property
    def median_ms(self) -> float:
        return 1000.0 * statistics.median(self.times)


@dataclass
class RatioRow:
    k: int
    i_min_global: float
    i_avg: dict[str, float]
    ratios: dict[str, float]


def run_trials(algorithm: str, data, k: int, trials: int = 100, base_seed: int = 0,
               config: TerminationConfig | None = None, timing_repeats: int = 5) -> TrialStats:
    """Run one algorithm repeatedly at a fixed K.

    KM reseeds each trial with ``base_seed + trial``.  IKM and DKM are
    deterministic, so they run ``timing_repeats`` times for timing only and
    their single distortion stands for every trial.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    x = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    config = config or TerminationConfig()
    times, dists, calls = [], [], 0
    if algorithm == "km":
        for t in range(trials):
            start = time.perf_counter()
            _, rep = run_km(x, k, config, seed=base_seed + t)
            times.append(time.perf_counter() - start)
            dists.append(rep.final_distortion)
        calls = 1
    else:
        run = DETERMINISTIC[algorithm]
        seen = set()
        for _ in range(max(1, timing_repeats)):
            start = time.perf_counter()
            _, rep = run(x, k, config)
            times.append(time.perf_counter() - start)
            seen.add(rep.final_distortion)
        if len(seen) != 1:
            raise ClusteringError(f"{algorithm} gave different results on identical input")
        dists = [seen.pop()] * trials
        calls = len(rep.learn_calls)
    return TrialStats(algorithm, k, trials, float(np.mean(dists)), float(min(dists)), times, dists, calls)


def ratio_table(stats) -> list[RatioRow]:
    """Per-K ratios ``i_avg / i_min_global`` for every algorithm in ``stats``."""
    grid: dict[str, dict[int, TrialStats]] = {}
    for s in stats:
        grid.setdefault(s.algorithm_tag, {})[s.k] = s
    ks = None
    for alg, by_k in grid.items():
        if ks is None:
            ks = sorted(by_k)
        elif sorted(by_k) != ks:
            raise ValueError(f"K grid of {alg} does not match the others")
    rows = []
    for k in ks or []:
        i_min = min(grid[a][k].i_min_local for a in grid)
        avg = {a: grid[a][k].i_avg for a in grid}
        ratios = {a: (v / i_min if i_min > 0 else 1.0) for a, v in avg.items()}
        rows.append(RatioRow(k, i_min, avg, ratios))
    return rows


def speedup_experiment(data, k: int, kt: int, length: int, worker_counts=(1, 2, 4, 8), repeats: int = 5,
                       config: TerminationConfig | None = None) -> list[dict]:
    """Median Par2PK-means wall time per worker count, relative to one worker."""
    if 1 not in worker_counts:
        raise ValueError("worker_counts must include 1")
    config = config or TerminationConfig()
    medians, outputs = {}, {}
    for w in sorted(set(worker_counts)):
        walls = []
        for _ in range(max(1, repeats)):
            clusters, rep = run_par2pk(data, k, kt, length, w, config)
            walls.append(rep.wall_time)
        medians[w] = statistics.median(walls)
        outputs[w] = clusters
    base = outputs[1]
    rows = []
    for w in sorted(medians):
        same = (np.array_equal(outputs[w].centers, base.centers)
                and np.array_equal(outputs[w].weights, base.weights))
        rows.append({
            "workers": w,
            "median_ms": 1000.0 * medians[w],
            "speedup": 1.0 if w == 1 else medians[1] / medians[w],
            "identical_to_1": bool(same),
            "reference": {label: ref.get(w) for label, ref in PUBLISHED_SPEEDUP.items()},
        })
    return rows


def ratios_csv_rows(dataset: str, rows: list[RatioRow]) -> list[str]:
    out = []
    for row in rows:
        for alg in row.ratios:
            out.append(f"{dataset},{row.k},{alg},{fmt(row.i_avg[alg])},{fmt(row.i_min_global)},{fmt(row.ratios[alg])}")
    return out


def times_csv_rows(dataset: str, stats) -> list[str]:
    return [f"{dataset},{s.k},{s.algorithm_tag},{s.median_ms:.3f},{s.learn_calls}"
            for s in sorted(stats, key=lambda s: (s.k, ALGORITHMS.index(s.algorithm_tag)))]


def speedup_csv_rows(dataset: str, rows: list[dict], with_reference: bool = True) -> list[str]:
    out = [f"{dataset},{r['workers']},{r['median_ms']:.3f},{r['speedup']:.4f}" for r in rows]
    if with_reference:
        # published reference values as extra rows: dataset "published:<size>", no timing
        for label, ref in PUBLISHED_SPEEDUP.items():
            for w, s in ref.items():
                out.append(f"published:{label},{w},,{s}")
    return out


def write_lines(path, header: str, lines: list[str]) -> None:
    def write(fh):
        fh.write(header + "\n")
        for line in lines:
            fh.write(line + "\n")

    atomic_write(path, write)


def write_json(path, payload) -> None:
    atomic_write(path, lambda fh: (json.dump(payload, fh, indent=2, sort_keys=True), fh.write("\n")))


def benchmark(data: Dataset, k_values, algorithms=ALGORITHMS, trials: int = 100, base_seed: int = 0,
              config: TerminationConfig | None = None, timing_repeats: int = 5):
    """Run every algorithm over the K grid; returns ``(stats, ratio rows)``."""
    stats = [run_trials(a, data, k, trials, base_seed, config, timing_repeats)
             for k in k_values for a in algorithms]
    return stats, ratio_table(stats)


def write_benchmark(out_dir, dataset: str, stats, rows) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    write_lines(os.path.join(out_dir, "ratios.csv"), RATIOS_HEADER, ratios_csv_rows(dataset, rows))
    write_lines(os.path.join(out_dir, "times.csv"), TIMES_HEADER, times_csv_rows(dataset, stats))
    summary = {
        "dataset": dataset,
        "k": [r.k for r in rows],
        "max_ratio": {a: max(r.ratios[a] for r in rows) for a in (rows[0].ratios if rows else {})},
    }
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary
