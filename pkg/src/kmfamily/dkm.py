"""Divisive K-means: double the cluster count by splitting, then step the last few.

The run has three stages.  Doubling splits every cluster while ``2*Kc`` stays
within ``K - margin``.  A partial split of the largest-distortion clusters then
lands exactly on ``K - margin``, and IKM-style single insertions finish the
job.  For ``K < 7`` the margin equals K and the run is plain IKM.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import Centroid, InfeasibleKError, RunReport, TerminationConfig, as_points, as_weights
from .ikm import _mean_start, _step_to, farthest_member, largest_distortion_order
from .lloyd import LearnOutcome, _learn, _prepare


@dataclass(frozen=True)
class DkmMargin:
    k_t: int


def compute_margin(k: int) -> DkmMargin:
    """Stepping margin: K itself below 7, else 10% of K clamped to [3, 5].

    Fractional tenths (only possible for 30 < K < 50) round half up; integer
    arithmetic keeps that exact.
    """
    if k < 1:
        raise ValueError("K must be at least 1")
    if k < 7:
        return DkmMargin(k)
    tenth = (k + 5) // 10
    return DkmMargin(min(max(3, tenth), 5))


def split_cluster(c: Centroid, members, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Split a cluster into ``(its center, its farthest member)``.

    A zero-distortion cluster yields two identical centers; callers that need
    a real split skip such clusters.
    """
    center = np.asarray(c.coords, dtype=np.float64)
    x = as_points(members, dim=center.shape[0])
    w = as_weights(weights, x.shape[0])
    idx = farthest_member(x, w, np.zeros(x.shape[0], dtype=np.intp), 0, center)
    return center.copy(), x[idx].copy()


def _split(out: LearnOutcome, x, w, count: int) -> np.ndarray:
    """Centers after splitting ``count`` clusters, largest distortion first.

    Clusters that cannot split (zero distortion) are skipped in favour of the
    next-largest.  Any shortfall left after all splittable clusters are used is
    filled with the worst-fit remaining points.
    """
    cl = out.clusters
    chosen = [i for i in largest_distortion_order(cl.distortions) if cl.distortions[i] > 0.0][:count]
    picks = [farthest_member(x, w, out.labels, i, cl.centers[i]) for i in chosen]
    if len(picks) < count:
        diff = x - cl.centers[out.labels]
        fit = w * np.einsum("ij,ij->i", diff, diff)
        fit[picks] = 0.0
        for idx in np.argsort(-fit, kind="stable")[: count - len(picks)]:
            if fit[idx] <= 0.0:
                raise InfeasibleKError(f"cannot split to {cl.k + count} clusters: too few distinct points")
            picks.append(int(idx))
    return np.vstack([cl.centers, x[picks]])


def run_dkm(points, k: int, config: TerminationConfig | None = None, weights=None):
    config = config or TerminationConfig()
    start = time.perf_counter()
    x, w = _prepare(points, weights)
    if k < 1 or k > x.shape[0]:
        raise InfeasibleKError(f"K={k} is infeasible for {x.shape[0]} points")
    margin = compute_margin(k).k_t
    target = k - margin

    out = _learn(x, w, _mean_start(x, w), config)
    calls = [(1, out.iterations_used)]
    kc = 1
    while 2 * kc <= target:
        out = _learn(x, w, _split(out, x, w, kc), config)
        kc *= 2
        calls.append((kc, out.iterations_used))
    if kc < target:
        out = _learn(x, w, _split(out, x, w, target - kc), config)
        kc = target
        calls.append((kc, out.iterations_used))
    out = _step_to(x, w, out, k, config, calls)
    report = RunReport("dkm", out.distortion, calls, time.perf_counter() - start, {"margin": margin})
    return out.clusters, report


def expected_learn_calls(k: int) -> int:
    """Closed-form count of learning calls made by :func:`run_dkm`."""
    margin = compute_margin(k).k_t
    if k < 7:
        return k
    span = k - margin
    log = span.bit_length() - 1
    return 1 + log + (0 if span & (span - 1) == 0 else 1) + margin
