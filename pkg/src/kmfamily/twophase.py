"""Two-Phase K-means, sequential and on an in-process worker pool.

Phase 1 (the mapper) compresses each data segment to ``kt`` weighted centers
with IKM.  Phase 2 (the reducer) pools every segment's centers, in segment
order, and runs weighted IKM to the final K.  Raw data is scanned once.

Choosing ``kt`` trades speed for quality: smaller ``kt`` means less phase-2
input, larger ``kt`` a closer approximation of IKM on the whole data set.
"""
from __future__ import annotations

import math
import multiprocessing as mp
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .core import ClusteringError, ClusterSet, Dataset, InfeasibleKError, RunReport, TerminationConfig, WeightedPoint, as_points
from .ikm import run_ikm
from .lloyd import run_km

LEARNERS = ("ikm", "km")


class SegmentError(ClusteringError):
    """A mapper failed; carries the index of the offending segment."""

    def __init__(self, segment_index: int, message: str):
        super().__init__(segment_index, message)
        self.segment_index = segment_index
        self.message = message

    def __str__(self):
        return f"segment {self.segment_index}: {self.message}"


class InfeasibleSegmentError(SegmentError, InfeasibleKError):
    pass


@dataclass(frozen=True)
class SegmentPlan:
    segment_length: int
    total_segments: int
    bounds: tuple[tuple[int, int], ...]


def plan_segments(n: int, length: int, kt: int) -> SegmentPlan:
    """Cut ``n`` rows into segments of ``length``.

    A final segment shorter than ``kt`` rows is folded into its predecessor.
    ``length`` larger than ``n`` yields a single segment.
    """
    if kt < 1:
        raise ValueError("kt must be at least 1")
    if length < kt:
        raise ValueError(f"segment length {length} cannot hold kt={kt} clusters")
    if n < kt:
        raise InfeasibleKError(f"{n} rows cannot supply kt={kt} clusters")
    length = min(length, n)
    s = math.ceil(n / length)
    if s > 1 and n - (s - 1) * length < kt:
        s -= 1
    bounds = tuple((i * length, (i + 1) * length if i < s - 1 else n) for i in range(s))
    return SegmentPlan(length, s, bounds)


def stream_segments(read: Callable[[int], np.ndarray], length: int, kt: int) -> Iterator[tuple[int, np.ndarray]]:
    """Segment a row stream without knowing its length up front.

    ``read(m)`` returns up to ``m`` further rows.  After each full block at most
    ``kt`` rows are read ahead, just enough to detect a short tail that must be
    merged; so no more than ``length + kt`` raw rows are held at once.
    """
    if length < kt:
        raise ValueError(f"segment length {length} cannot hold kt={kt} clusters")
    block = read(length)
    index = 0
    while block.shape[0]:
        if block.shape[0] < length:
            yield index, block
            return
        ahead = read(kt)
        if ahead.shape[0] < kt:
            yield index, np.concatenate([block, ahead]) if ahead.shape[0] else block
            return
        yield index, block
        index += 1
        rest = read(length - kt)
        block = np.concatenate([ahead, rest]) if rest.shape[0] else ahead


class ArraySource:
    """In-memory row source that counts every row it hands out."""

    def __init__(self, points):
        self.points = as_points(points.points if isinstance(points, Dataset) else points)
        self.rows_read = 0

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def segments(self, length: int, kt: int) -> Iterator[tuple[int, np.ndarray]]:
        for i, (lo, hi) in enumerate(plan_segments(self.n, length, kt).bounds):
            self.rows_read += hi - lo
            yield i, self.points[lo:hi]


def as_source(data):
    if hasattr(data, "segments"):
        return data
    return ArraySource(data)


@dataclass(frozen=True)
class IntermediateResult:
    segment_index: int
    centers: np.ndarray
    weights: np.ndarray
    learn_calls: tuple = field(default=(), compare=False)

    @property
    def weighted_centers(self) -> list[WeightedPoint]:
        return [WeightedPoint(tuple(c), float(w)) for c, w in zip(self.centers, self.weights)]

    @property
    def n_objects(self) -> float:
        return float(self.weights.sum())


def phase1_map(segment, kt: int, config: TerminationConfig | None = None, segment_index: int = 0,
               learner: str = "ikm", seed: int = 0) -> IntermediateResult:
    """Compress one segment to ``kt`` weighted centers."""
    if learner not in LEARNERS:
        raise ValueError(f"unknown phase-1 learner {learner!r}")
    x = np.array(segment, dtype=np.float64, order="C")
    try:
        if learner == "ikm":
            clusters, report = run_ikm(x, kt, config)
        else:
            clusters, report = run_km(x, kt, config, seed=seed + segment_index)
    except InfeasibleKError as exc:
        raise InfeasibleSegmentError(segment_index, str(exc)) from None
    # a cluster emptied by the final assignment carries no objects
    keep = clusters.weights > 0
    return IntermediateResult(segment_index, clusters.centers[keep].copy(), clusters.weights[keep].copy(),
                              tuple(report.learn_calls))


def phase2_reduce(intermediates, k: int, config: TerminationConfig | None = None):
    """Cluster the pooled weighted centers of every segment to K.

    Returns ``(clusters, report)``; the clusters' weights add up to the number
    of raw objects behind the intermediates.  When exactly ``k`` distinct
    centers are pooled the answer is those centers themselves, returned in
    pooled order with no learning call.
    """
    ordered = sorted(intermediates, key=lambda r: r.segment_index)
    if not ordered:
        raise InfeasibleKError("no intermediate results to reduce")
    centers = np.concatenate([r.centers for r in ordered])
    weights = np.concatenate([r.weights for r in ordered])
    if centers.shape[0] < k:
        raise InfeasibleKError(
            f"only {centers.shape[0]} pooled centers for K={k}; use a larger kt or fewer segments")
    if centers.shape[0] == k and np.unique(centers, axis=0).shape[0] == k:
        # every pooled center is its own cluster: zero distortion, kept in pooled order
        return ClusterSet(centers, weights, np.zeros(k)), RunReport("ikm", 0.0, [], 0.0)
    return run_ikm(centers, k, config, weights=weights)


def _finish(tag, intermediates, k, config, start, source, extras):
    clusters, p2 = phase2_reduce(intermediates, k, config)
    ordered = sorted(intermediates, key=lambda r: r.segment_index)
    extras.update(
        intermediates=ordered,
        segments=len(ordered),
        rows_read=getattr(source, "rows_read", None),
        phase1_learn_calls=[r.learn_calls for r in ordered],
    )
    return clusters, RunReport(tag, p2.final_distortion, p2.learn_calls, time.perf_counter() - start, extras)


def run_2pk_sequential(data, k: int, kt: int, length: int, config: TerminationConfig | None = None,
                       learner: str = "ikm", seed: int = 0):
    """Single-scan Two-Phase K-means processing one segment at a time.

    ``report.final_distortion`` is the phase-2 distortion over the pooled
    weighted centers; score against raw data with ``total_distortion``.
    """
    config = config or TerminationConfig()
    start = time.perf_counter()
    source = as_source(data)
    results = []
    for index, block in source.segments(length, kt):
        results.append(phase1_map(block, kt, config, index, learner, seed))
        del block
    return _finish("2pk", results, k, config, start, source, {"kt": kt, "segment_length": length})


def _map_task(args):
    index, block, kt, config, learner, seed = args
    try:
        return phase1_map(block, kt, config, index, learner, seed)
    except SegmentError:
        raise
    except Exception as exc:  # surfaced to the caller with the segment index attached
        raise SegmentError(index, f"{type(exc).__name__}: {exc}") from None


def _context():
    methods = mp.get_all_start_methods()
    return mp.get_context("fork" if "fork" in methods else methods[0])


def run_par2pk(data, k: int, kt: int, length: int, workers: int, config: TerminationConfig | None = None,
               learner: str = "ikm", seed: int = 0, max_pending: int | None = None):
    """Two-Phase K-means with phase 1 spread over a pool of worker processes.

    Segments are fed to the pool through a bounded window of ``max_pending``
    in-flight tasks (default ``2 * workers``).  Every mapper must finish before
    the single reduce runs, and results are reduced in segment order.  The
    output is therefore identical to :func:`run_2pk_sequential` whatever the
    worker count or completion order.  The first mapper failure cancels the
    job and is re-raised as :class:`SegmentError`.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    config = config or TerminationConfig()
    max_pending = max_pending or 2 * workers
    start = time.perf_counter()
    source = as_source(data)
    results: list[IntermediateResult] = []
    with ProcessPoolExecutor(max_workers=workers, mp_context=_context()) as pool:
        pending = set()
        try:
            for index, block in source.segments(length, kt):
                if len(pending) >= max_pending:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    results.extend(f.result() for f in done)
                pending.add(pool.submit(_map_task, (index, block, kt, config, learner, seed)))
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                results.extend(f.result() for f in done)
        except BaseException:
            for f in pending:
                f.cancel()
            pool.shutdown(wait=True, cancel_futures=True)
            raise
    return _finish("par2pk", results, k, config, start, source,
                   {"kt": kt, "segment_length": length, "workers": workers})
