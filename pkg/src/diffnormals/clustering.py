"""Euclidean cluster extraction on a subset of a cloud."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .cloud import PointCloud
from .errors import IndexOutOfRangeError, InvalidParamsError
from .index import build_index

DEFAULT_MIN_POINTS = 100
DEFAULT_MAX_POINTS = 100_000


@dataclass(frozen=True)
class ClusterParams:
    tolerance: float
    min_points: int = DEFAULT_MIN_POINTS
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise InvalidParamsError(f"cluster tolerance must be positive, got {self.tolerance}")
        if not (0 < self.min_points <= self.max_points):
            raise InvalidParamsError(
                f"need 0 < min_points <= max_points, got {self.min_points}, {self.max_points}"
            )


@dataclass(frozen=True, eq=False)
class Cluster:
    """Sorted point indices into the source cloud."""

    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        return isinstance(other, Cluster) and np.array_equal(self.indices, other.indices)

    def __hash__(self) -> int:
        return hash(self.indices.tobytes())

    @property
    def min_index(self) -> int:
        return int(self.indices[0])


def euclidean_clusters(cloud: PointCloud, subset, params: ClusterParams) -> list[Cluster]:
    """Connected components of ``subset`` under distance ``<= tolerance``.

    Only subset points can link clusters. Components smaller than
    ``min_points`` or larger than ``max_points`` are dropped. Clusters come
    back largest first, ties by smallest member index.
    """
    subset = np.unique(np.asarray(subset, dtype=np.int64).reshape(-1))
    n = len(cloud)
    if subset.size and (subset[0] < 0 or subset[-1] >= n):
        raise IndexOutOfRangeError(f"subset indices must lie in [0, {n})")
    if subset.size == 0:
        return []
    sub = cloud.select(subset)
    pairs = build_index(sub).pairs_within(params.tolerance)
    m = len(subset)
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(m, m)
    )
    _, labels = connected_components(graph, directed=False)
    # members sorted by label, then by original index (subset is ascending)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    clusters = [
        Cluster(subset[g])
        for g in np.split(order, bounds)
        if params.min_points <= len(g) <= params.max_points
    ]
    clusters.sort(key=lambda c: (-len(c), c.min_index))
    return clusters


def cluster_labels(n: int, clusters: list[Cluster]) -> np.ndarray:
    """Per-point cluster id in output order; -1 for unclustered points."""
    labels = np.full(n, -1, dtype=np.int64)
    for cid, c in enumerate(clusters):
        labels[c.indices] = cid
    return labels
