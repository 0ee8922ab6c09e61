"""The shared K-means learning loop, generalized to weighted points."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    ClusterSet,
    DimensionError,
    InfeasibleKError,
    RunReport,
    TerminationConfig,
    as_points,
    as_weights,
    nearest,
)


class StopReason(str, Enum):
    DISPLACEMENT = "displacement"
    MAX_ITERATIONS = "max_iterations"
    NO_MOVEMENT = "no_movement"


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    sq_dists: np.ndarray
    weights: np.ndarray
    distortions: np.ndarray


@dataclass(frozen=True)
class LearnOutcome:
    clusters: ClusterSet
    labels: np.ndarray
    iterations_used: int
    converged_by: StopReason
    distortion_trace: list[float]
    distortion: float


def _prepare(points, weights, centers=None):
    dim = None
    if centers is not None:
        dim = np.asarray(centers.centers if isinstance(centers, ClusterSet) else centers).shape[-1]
    x = as_points(points, dim=dim)
    return x, as_weights(weights, x.shape[0])


def _assign(x: np.ndarray, w: np.ndarray, centers: np.ndarray) -> Assignment:
    k = centers.shape[0]
    labels, d2 = nearest(x, centers)
    cw = np.bincount(labels, weights=w, minlength=k)
    cd = np.bincount(labels, weights=w * d2, minlength=k)
    return Assignment(labels, d2, cw, cd)


def assign_step(points, clusters, weights=None) -> Assignment:
    """Label each point with its nearest center and tally per-cluster weight and distortion."""
    centers = clusters.centers if isinstance(clusters, ClusterSet) else np.asarray(clusters, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers.reshape(-1, 1)
    if centers.shape[0] == 0:
        raise DimensionError("empty center set")
    x, w = _prepare(points, weights, centers)
    return _assign(x, w, centers)


def _update(x, w, labels, k, previous=None):
    cw = np.bincount(labels, weights=w, minlength=k)
    d = x.shape[1]
    sums = np.empty((k, d))
    for j in range(d):
        sums[:, j] = np.bincount(labels, weights=w * x[:, j], minlength=k)
    empty = cw == 0
    centers = np.zeros((k, d)) if previous is None else np.array(previous, dtype=np.float64)
    centers[~empty] = sums[~empty] / cw[~empty, None]
    return centers, np.flatnonzero(empty)


def update_step(points, labels, k: int | None = None, weights=None):
    """Move each non-empty cluster to the weighted mean of its members.

    Returns ``(centers, empty)`` where ``empty`` lists cluster indices that
    received no members; their rows are zero and must be repaired.
    """
    x, w = _prepare(points, weights)
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (x.shape[0],) or (labels.size and labels.min() < 0):
        raise DimensionError("one non-negative label per point is required")
    if k is None:
        k = int(labels.max()) + 1
    return _update(x, w, labels, k)


def _repair(centers, empty, x, w, assignment: Assignment) -> np.ndarray:
    if len(empty) == 0:
        return centers
    k = centers.shape[0]
    if x.shape[0] < k:
        raise InfeasibleKError(f"{k} clusters requested for {x.shape[0]} points")
    fit = w * assignment.sq_dists
    # stable sort: equal misfit keeps point order, so the lowest index wins
    order = np.argsort(-fit, kind="stable")
    centers = centers.copy()
    for slot, idx in zip(empty, order):
        if fit[idx] <= 0.0:
            raise InfeasibleKError(f"{k} clusters requested but too few distinct points to fill them")
        centers[slot] = x[idx]
    return centers


def repair_empty_cluster(clusters, points, labels, weights=None) -> ClusterSet:
    """Reseed every empty cluster at the worst-fit point of the current assignment.

    Worst fit is the largest weighted squared distance to the center the point
    was assigned to; each point serves at most one repair.
    """
    x, w = _prepare(points, weights, clusters)
    labels = np.asarray(labels, dtype=np.intp)
    centers = clusters.centers
    k = centers.shape[0]
    d2 = np.einsum("ij,ij->i", x - centers[labels], x - centers[labels])
    cw = np.bincount(labels, weights=w, minlength=k)
    empty = np.flatnonzero(cw == 0)
    if len(empty) == 0:
        return clusters
    a = Assignment(labels, d2, cw, np.bincount(labels, weights=w * d2, minlength=k))
    return ClusterSet(_repair(np.array(centers), empty, x, w, a))


def _learn(x, w, centers, config: TerminationConfig) -> LearnOutcome:
    centers = np.array(centers, dtype=np.float64)
    k = centers.shape[0]
    trace: list[float] = []
    prev_labels = None
    reason = StopReason.MAX_ITERATIONS
    a = None
    fresh = False
    it = 0
    while it < config.max_iterations:
        it += 1
        a = _assign(x, w, centers)
        trace.append(float(a.distortions.sum()))
        if prev_labels is not None and np.array_equal(a.labels, prev_labels):
            reason = StopReason.NO_MOVEMENT
            fresh = True
            break
        prev_labels = a.labels
        new_centers, empty = _update(x, w, a.labels, k, previous=centers)
        new_centers = _repair(new_centers, empty, x, w, a)
        diff = new_centers - centers
        displacement = float(np.sqrt(np.einsum("ij,ij->i", diff, diff)).sum())
        centers = new_centers
        if displacement < config.epsilon:
            reason = StopReason.DISPLACEMENT
            break
    if not fresh:
        a = _assign(x, w, centers)
    clusters = ClusterSet(centers, a.weights, a.distortions)
    return LearnOutcome(clusters, a.labels, it, reason, trace, math.fsum(w * a.sq_dists))


def kmeans_learn(points, initial, config: TerminationConfig | None = None, weights=None) -> LearnOutcome:
    """Alternate assignment and mean updates from ``initial`` until a stopping rule fires.

    Stops when the summed Euclidean displacement of all centers drops below
    ``config.epsilon``, when the assignment repeats, or after
    ``config.max_iterations`` rounds.  The returned clusters carry weights and
    distortions from an assignment against the final centers.
    """
    config = config or TerminationConfig()
    init = initial.centers if isinstance(initial, ClusterSet) else np.asarray(initial, dtype=np.float64)
    if init.ndim == 1:
        init = init.reshape(-1, 1)
    if init.shape[0] < 1:
        raise DimensionError("need at least one initial center")
    x, w = _prepare(points, weights, init)
    if x.shape[0] < 1:
        raise DimensionError("no points to learn from")
    return _learn(x, w, init, config)


def random_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """K distinct data points chosen uniformly at random."""
    _, first = np.unique(points, axis=0, return_index=True)
    first.sort()
    if first.shape[0] < k:
        raise InfeasibleKError(f"{k} clusters requested for {first.shape[0]} distinct points")
    pick = rng.choice(first.shape[0], size=k, replace=False)
    return points[first[pick]].copy()


def run_km(points, k: int, config: TerminationConfig | None = None, seed: int = 0, weights=None):
    """Plain K-means from a seeded random initialization."""
    config = config or TerminationConfig()
    start = time.perf_counter()
    x, w = _prepare(points, weights)
    if k < 1:
        raise InfeasibleKError("K must be at least 1")
    init = random_init(x, k, np.random.default_rng(seed))
    out = _learn(x, w, init, config)
    report = RunReport(
        "km",
        out.distortion,
        [(k, out.iterations_used)],
        time.perf_counter() - start,
        {"seed": seed},
    )
    return out.clusters, report
