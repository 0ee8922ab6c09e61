"""Incremental K-means: grow the cluster count one at a time from 1 to K.

Each new cluster is inserted into the cluster with the largest distortion, at
the member point lying farthest from that cluster's center.  The original
description names only the receiving cluster; the farthest-member position is
this package's choice and can be swapped via ``insert``.
"""
from __future__ import annotations

import time

import numpy as np

from .core import ClusterSet, InfeasibleKError, RunReport, TerminationConfig
from .lloyd import _learn, _prepare, _update


def farthest_member(x: np.ndarray, w: np.ndarray, labels: np.ndarray, cluster: int, center: np.ndarray) -> int:
    """Index of the member of ``cluster`` with the largest weighted squared distance to ``center``."""
    members = np.flatnonzero(labels == cluster)
    if members.size == 0:
        raise InfeasibleKError(f"cluster {cluster} has no members")
    diff = x[members] - center
    fit = w[members] * np.einsum("ij,ij->i", diff, diff)
    return int(members[np.argmax(fit)])


def largest_distortion_order(distortions: np.ndarray) -> np.ndarray:
    """Cluster indices by decreasing distortion, ties by lowest index."""
    return np.argsort(-np.asarray(distortions), kind="stable")


def insert_into_largest(clusters: ClusterSet, points, labels, weights=None) -> ClusterSet:
    """Append one center at the farthest member of the max-distortion cluster."""
    x, w = _prepare(points, weights, clusters)
    labels = np.asarray(labels, dtype=np.intp)
    target = int(largest_distortion_order(clusters.distortions)[0])
    if clusters.distortions[target] <= 0.0:
        # zero distortion everywhere: every point sits on a center already
        raise InfeasibleKError(f"cannot grow past {clusters.k} clusters: no distinct point left to seed from")
    idx = farthest_member(x, w, labels, target, clusters.centers[target])
    centers = np.vstack([clusters.centers, x[idx]])
    return ClusterSet(centers, np.append(clusters.weights, 0.0), np.append(clusters.distortions, 0.0))


def _mean_start(x, w) -> np.ndarray:
    centers, _ = _update(x, w, np.zeros(x.shape[0], dtype=np.intp), 1)
    return centers


def _step_to(x, w, out, k, config, calls, insert=insert_into_largest):
    while out.clusters.k < k:
        grown = insert(out.clusters, x, out.labels, w)
        out = _learn(x, w, grown.centers, config)
        calls.append((grown.k, out.iterations_used))
    return out


def run_ikm(points, k: int, config: TerminationConfig | None = None, weights=None, insert=insert_into_largest):
    """Incremental K-means.  Fully deterministic: there is no random initialization."""
    config = config or TerminationConfig()
    start = time.perf_counter()
    x, w = _prepare(points, weights)
    if k < 1 or k > x.shape[0]:
        raise InfeasibleKError(f"K={k} is infeasible for {x.shape[0]} points")
    out = _learn(x, w, _mean_start(x, w), config)
    calls = [(1, out.iterations_used)]
    out = _step_to(x, w, out, k, config, calls, insert)
    report = RunReport("ikm", out.distortion, calls, time.perf_counter() - start)
    return out.clusters, report
