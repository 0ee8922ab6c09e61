"""Domain types and exact numeric primitives shared by every algorithm.

Points travel through the library as a pair of arrays: ``points`` of shape
``(n, d)`` and ``weights`` of shape ``(n,)``.  A raw data object has weight 1;
a compressed phase-1 center carries the number of objects it stands for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


class ClusteringError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ClusteringError, ValueError):
    """Inputs disagree on dimensionality or are otherwise malformed."""


class InfeasibleKError(ClusteringError):
    """More clusters were requested than there are distinct points to hold them."""


class DataError(ClusteringError):
    """A data file could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 ``(n, d)`` array."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionError(f"expected a 2-D array of points, got shape {x.shape}")
    if dim is not None and x.shape[1] != dim:
        raise DimensionError(f"dimension mismatch: expected {dim}, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise DimensionError("points contain NaN or infinite coordinates")
    return x


def as_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n:
        raise DimensionError(f"{w.shape[0]} weights for {n} points")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DimensionError("weights must be finite and positive")
    return w


@dataclass(frozen=True)
class WeightedPoint:
    coords: tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        if len(self.coords) < 1:
            raise DimensionError("a point needs at least one coordinate")
        if not all(np.isfinite(self.coords)):
            raise DimensionError("coordinates must be finite")
        if not (self.weight > 0 and np.isfinite(self.weight)):
            raise DimensionError("weight must be positive")


@dataclass(frozen=True)
class Dataset:
    """A fixed-dimension collection of raw data objects."""

    points: np.ndarray
    name: str = "data"

    def __post_init__(self):
        x = as_points(self.points)
        if x.shape[0] < 1:
            raise DimensionError("a dataset needs at least one point")
        if x is self.points:
            x = x.copy()
        object.__setattr__(self, "points", _frozen(x))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Centroid:
    coords: np.ndarray
    weight: float
    distortion: float


@dataclass(frozen=True)
class ClusterSet:
    """K centroids with the member weight and distortion of each cluster.

    ``weights`` and ``distortions`` reflect the most recent assignment pass
    against whatever points the set was learned on.
    """

    centers: np.ndarray
    weights: np.ndarray = None
    distortions: np.ndarray = None

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64, ndmin=2)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise DimensionError(f"need at least one center, got shape {c.shape}")
        k = c.shape[0]
        w = np.zeros(k) if self.weights is None else np.array(self.weights, dtype=np.float64)
        dist = np.zeros(k) if self.distortions is None else np.array(self.distortions, dtype=np.float64)
        if w.shape != (k,) or dist.shape != (k,):
            raise DimensionError("weights/distortions must have one entry per center")
        object.__setattr__(self, "centers", _frozen(c))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "distortions", _frozen(dist))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def total_distortion(self) -> float:
        return float(self.distortions.sum())

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, i: int) -> Centroid:
        return Centroid(self.centers[i], float(self.weights[i]), float(self.distortions[i]))

    def __iter__(self) -> Iterator[Centroid]:
        return (self[i] for i in range(self.k))


@dataclass(frozen=True)
class TerminationConfig:
    """Stopping rules for the Lloyd loop: an iteration cap and a displacement threshold."""

    max_iterations: int = 20
    epsilon: float = 1e-7

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not (self.epsilon >= 0):
            raise ValueError("epsilon must be non-negative")


@dataclass
class RunReport:
    algorithm_tag: str
    final_distortion: float
    learn_calls: list[tuple[int, int]]
    wall_time: float
    extras: dict = field(default_factory=dict)

    @property
    def kc_sequence(self) -> list[int]:
        return [kc for kc, _ in self.learn_calls]


def squared_distance(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(np.dot(diff, diff))


def _centers_of(centers) -> np.ndarray:
    if isinstance(centers, ClusterSet):
        return centers.centers
    c = np.asarray(centers, dtype=np.float64)
    if c.ndim == 1:
        c = c.reshape(-1, 1)
    if c.size == 0:
        raise DimensionError("empty center set")
    return c


def distance_matrix(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared distances of shape ``(n, k)``, computed by explicit differences.

    The ``|x|^2 + |c|^2 - 2x.c`` expansion is avoided on purpose: it turns exact
    ties and exact zeros into rounding noise.
    """
    out = np.empty((points.shape[0], centers.shape[0]), dtype=np.float64)
    for j in range(centers.shape[0]):
        diff = points - centers[j]
        np.einsum("ij,ij->i", diff, diff, out=out[:, j])
    return out


def nearest(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Label and squared distance of the nearest center for each point.

    ``argmin`` returns the first minimum, which gives the lowest-index tie-break.
    """
    d2 = distance_matrix(points, centers)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(points.shape[0]), labels]


def nearest_center(p: Sequence[float], centers) -> int:
    c = _centers_of(centers)
    if c.shape[0] == 0:
        raise DimensionError("empty center set")
    x = as_points(np.asarray(p, dtype=np.float64).reshape(1, -1), dim=c.shape[1])
    labels, _ = nearest(x, c)
    return int(labels[0])


def total_distortion(points, centers, weights=None) -> float:
    """Weighted sum of squared distances from each point to its nearest center.

    ``points`` may also be a sequence of :class:`WeightedPoint`, in which case
    their own weights are used.
    """
    c = _centers_of(centers)
    if c.shape[0] == 0:
        raise DimensionError("empty center set")
    if len(points) and isinstance(points[0], WeightedPoint):
        weights = [p.weight for p in points]
        points = [p.coords for p in points]
    if len(points) == 0:
        return 0.0
    x = as_points(points, dim=c.shape[1])
    w = as_weights(weights, x.shape[0])
    _, d2 = nearest(x, c)
    return math.fsum(w * d2)
