"""Fixed-radius PCA surface normals.

Each normal is the eigenvector for the smallest eigenvalue of the covariance
of all points within the support radius (about their centroid). A normal is
invalid when fewer than three points fall in the ball or the tangent plane
is not unique. Valid normals start in a canonical sign: the first component
that is nonzero beyond round-off (magnitude above 1e-9) is positive.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from ._fallback import normals_from_covariances
from .cloud import PointCloud, VoxelGridSpec, as_point, voxel_downsample_indices
from .index import SpatialIndex, check_radius

# two smallest eigenvalues closer than this (relative to the largest) -> invalid
DEGENERACY_REL_GAP = 1e-9

# fixed work unit; thread count only changes which thread runs a chunk
CHUNK_SIZE = 2048


@dataclass(frozen=True)
class UnitNormal:
    nx: float
    ny: float
    nz: float
    valid: bool

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    @classmethod
    def invalid(cls) -> "UnitNormal":
        return cls(0.0, 0.0, 0.0, False)


@dataclass(frozen=True)
class DecimationSpec:
    """Approximate large-radius search against a voxel-resampled cloud.

    The search cloud for support radius ``r`` is resampled at voxel length
    ``r / d``.
    """

    d: int = 10
    enabled: bool = True

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"decimation parameter must be an integer >= 1, got {self.d}")

    @classmethod
    def off(cls) -> "DecimationSpec":
        return cls(1, False)

    @classmethod
    def from_cli(cls, d: int) -> "DecimationSpec":
        """``d == 0`` means exact computation."""
        return cls.off() if d == 0 else cls(d, True)


@dataclass
class NormalMap:
    normals: np.ndarray
    valid: np.ndarray
    radius: float
    neighbor_counts: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.normals) != len(self.valid):
            raise ValueError("normals and validity mask differ in length")
        check_radius(self.radius)

    def __len__(self) -> int:
        return len(self.valid)

    def __getitem__(self, i) -> UnitNormal:
        if not self.valid[i]:
            return UnitNormal.invalid()
        x, y, z = self.normals[i]
        return UnitNormal(float(x), float(y), float(z), True)


def estimate_normal(cloud: PointCloud, index: SpatialIndex, q, r) -> UnitNormal:
    """Normal at position ``q`` from the points of ``cloud`` within ``r``."""
    r = check_radius(r)
    q = as_point(q)
    nbrs = index.radius_search(q, r)
    if len(nbrs) < 3:
        return UnitNormal.invalid()
    d = cloud.points[nbrs] - q
    centered = d - d.mean(axis=0)
    cov = centered.T @ centered / len(nbrs)
    normals, valid = normals_from_covariances(
        cov[None], np.array([len(nbrs)]), DEGENERACY_REL_GAP
    )
    if not valid[0]:
        return UnitNormal.invalid()
    x, y, z = normals[0]
    return UnitNormal(float(x), float(y), float(z), True)


class _SearchGrid:
    """Points bucketed by cubic cells of edge >= radius, ordered by cell key."""

    def __init__(self, pts: np.ndarray, radius: float):
        self.cell = radius * (1.0 + 1e-6)
        self.origin = pts.min(axis=0)
        ijk = np.floor((pts - self.origin) / self.cell).astype(np.int64)
        self.dims = ijk.max(axis=0) + 1
        if float(np.prod(self.dims.astype(np.float64))) >= 2.0**62:
            raise ValueError("search grid too large for 64-bit cell keys")
        keys = ijk[:, 0] + self.dims[0] * (ijk[:, 1] + self.dims[1] * ijk[:, 2])
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        self.points = np.ascontiguousarray(pts[order])
        self.keys, self.start = np.unique(sorted_keys, return_index=True)
        self.start = self.start.astype(np.int64)
        self.stop = np.append(self.start[1:], len(sorted_keys)).astype(np.int64)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def _run_chunks(fn, n: int, threads: int) -> None:
    bounds = [(s, min(s + CHUNK_SIZE, n)) for s in range(0, n, CHUNK_SIZE)]
    if threads == 1 or len(bounds) <= 1:
        for s, e in bounds:
            fn(s, e)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(fn, s, e) for s, e in bounds]:
            fut.result()


def normals_at(
    search_points: np.ndarray,
    queries: np.ndarray,
    r: float,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normals at ``queries`` estimated from ``search_points`` within ``r``.

    Returns ``(normals, valid, neighbor_counts)``. Every query owns one output
    slot, so results do not depend on ``threads``.
    """
    r = check_radius(r)
    kernel = _backend.resolve(backend)
    queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
    search_points = np.ascontiguousarray(search_points, dtype=np.float64).reshape(-1, 3)
    m = len(queries)
    out = np.zeros((m, 3))
    valid = np.zeros(m, dtype=np.uint8)
    counts = np.zeros(m, dtype=np.int64)
    if m == 0:
        return out, valid.astype(bool), counts

    if len(search_points) == 0:
        return out, valid.astype(bool), counts
    if kernel is _backend._fallback:
        tree = cKDTree(search_points)

        def work(s, e):
            kernel.normals_range(tree, search_points, queries, r, DEGENERACY_REL_GAP,
                                 out, valid, counts, s, e)
    else:
        grid = _SearchGrid(search_points, r)

        def work(s, e):
            kernel.normals_range(grid.points, grid.keys, grid.start, grid.stop,
                                 grid.origin, grid.cell, grid.dims, queries, r,
                                 DEGENERACY_REL_GAP, out, valid, counts, s, e)

    _run_chunks(work, m, _resolve_threads(threads))
    return out, valid.astype(bool), counts


def search_cloud_indices(cloud: PointCloud, r: float, decim: Optional[DecimationSpec]) -> Optional[np.ndarray]:
    """Indices of the decimated search cloud for radius ``r``, or ``None``."""
    if decim is None or not decim.enabled:
        return None
    return voxel_downsample_indices(cloud, VoxelGridSpec(r / decim.d))


def estimate_normal_map(
    cloud: PointCloud,
    r: float,
    decim: Optional[DecimationSpec] = None,
    *,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> NormalMap:
    """Normal at every point of ``cloud`` with support radius ``r``.

    With decimation enabled, neighbours come from a voxel-resampled copy of
    the cloud (voxel length ``r / d``) while normals are still placed at the
    original points. The query point is not re-inserted into that copy.
    """
    r = check_radius(r)
    pts = cloud.points
    sub = search_cloud_indices(cloud, r, decim)
    search = pts if sub is None else pts[sub]
    normals, valid, counts = normals_at(search, pts, r, threads=threads, backend=backend)
    return NormalMap(normals, valid, r, counts)


def orient_to_viewpoint(nmap: NormalMap, cloud: PointCloud, viewpoint) -> NormalMap:
    """Flip each valid normal into the hemisphere facing ``viewpoint``."""
    if len(nmap) != len(cloud):
        raise ValueError("normal map and cloud differ in length")
    vp = as_point(viewpoint)
    facing = np.einsum("ij,ij->i", nmap.normals, vp - cloud.points)
    flip = nmap.valid & (facing < 0.0)
    normals = nmap.normals.copy()
    normals[flip] *= -1.0
    return NormalMap(normals, nmap.valid.copy(), nmap.radius, nmap.neighbor_counts)


def angular_deviation_deg(a: NormalMap, b: NormalMap) -> np.ndarray:
    """Unsigned angle between two maps' normals where both are valid."""
    both = a.valid & b.valid
    dots = np.abs(np.einsum("ij,ij->i", a.normals[both], b.normals[both]))
    return np.degrees(np.arccos(np.clip(dots, 0.0, 1.0)))
