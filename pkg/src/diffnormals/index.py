"""Fixed-radius neighbour search over a point cloud snapshot."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud, as_point
from .errors import InvalidRadiusError


def check_radius(r) -> float:
    r = float(r)
    if not (math.isfinite(r) and r > 0):
        raise InvalidRadiusError(f"radius must be positive and finite, got {r}")
    return r


class SpatialIndex:
    """Immutable radius-search structure built over one cloud.

    Queries are read-only and may be issued from several threads at once.
    The neighbourhood is closed: a point at distance exactly ``r`` is found.
    """

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self._tree = cKDTree(cloud.points) if len(cloud) else None

    def __len__(self) -> int:
        return len(self.cloud)

    def radius_search(self, q, r) -> np.ndarray:
        """Sorted indices ``i`` with ``|p_i - q| <= r``."""
        r = check_radius(r)
        q = as_point(q)
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        return np.asarray(sorted(self._tree.query_ball_point(q, r)), dtype=np.intp)

    def radius_search_many(self, queries, r) -> list[np.ndarray]:
        r = check_radius(r)
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if self._tree is None:
            return [np.empty(0, dtype=np.intp) for _ in range(len(queries))]
        hits = self._tree.query_ball_point(queries, r, return_sorted=True)
        return [np.asarray(h, dtype=np.intp) for h in hits]

    def pairs_within(self, r) -> np.ndarray:
        """All index pairs ``(i, j)``, ``i < j``, at distance ``<= r``."""
        r = check_radius(r)
        if self._tree is None:
            return np.empty((0, 2), dtype=np.intp)
        return self._tree.query_pairs(r, output_type="ndarray")


def build_index(cloud: PointCloud) -> SpatialIndex:
    return SpatialIndex(cloud)


def radius_search(index: SpatialIndex, q, r) -> np.ndarray:
    return index.radius_search(q, r)
