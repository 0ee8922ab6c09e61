"""Test oracles and fixtures that do not go through the library's own code paths."""
from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

DATA = Path(__file__).parent / "data"

SQUARE = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


def partition_sse(x, labels, k, w=None):
    """Weighted SSE of a labelling with centers at the weighted cluster means, by direct loops."""
    w = np.ones(len(x)) if w is None else np.asarray(w, dtype=float)
    total = 0.0
    for j in range(k):
        m = labels == j
        if not m.any():
            return np.inf
        mean = (x[m] * w[m, None]).sum(0) / w[m].sum()
        total += float((w[m] * ((x[m] - mean) ** 2).sum(1)).sum())
    return total


def brute_force_optimum(x, k, w=None):
    """Minimum SSE over every labelling of ``x`` into ``k`` non-empty clusters.

    Screens all k**n label vectors with the sum-of-squares identity, then
    re-scores the near-best ones exactly.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    labels = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int8)
    onehot = (labels[:, :, None] == np.arange(k)).astype(float) * w[None, :, None]
    cnt = onehot.sum(1)
    valid = (cnt > 0).all(1)
    sums = np.einsum("mnk,nd->mkd", onehot, x)
    sq = np.einsum("mnk,n->mk", onehot, (x ** 2).sum(1))
    sse = sq.sum(1) - ((sums ** 2).sum(2) / np.where(cnt > 0, cnt, 1)).sum(1)
    sse[~valid] = np.inf
    floor = sse.min()
    near = np.flatnonzero(sse <= floor + 1e-6 * max(1.0, abs(floor)))
    return min(partition_sse(x, labels[i].astype(int), k, w) for i in near)


def random_instance(seed):
    """Small instance for oracle comparisons: 6-10 points, 1-3 dims, K in {2, 3}."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 11))
    d = int(rng.integers(1, 4))
    k = int(rng.integers(2, 4))
    return rng.normal(size=(n, d)), k


def blobs(n, d=4, centers=10, seed=0, spread=1.0, box=20.0):
    """Seeded isotropic Gaussian mixture with equal-probability components."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(-box, box, size=(centers, d))
    which = rng.integers(0, centers, size=n)
    return means[which] + rng.normal(scale=spread, size=(n, d))


def load_benchmark(name):
    """A bundled benchmark data set as a raw float array, class column dropped."""
    arr = np.genfromtxt(DATA / f"{name}.csv", delimiter=",", skip_header=1)
    return arr[:, :-1]
