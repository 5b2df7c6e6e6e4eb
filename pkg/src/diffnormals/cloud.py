"""Point cloud container and voxel-grid resampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import UnknownAttributeError


def as_point(q) -> np.ndarray:
    """Coerce ``q`` to a finite float64 3-vector."""
    p = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape != (3,):
        raise ValueError(f"expected a 3D point, got shape {np.shape(q)}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    return p


class PointCloud:
    """An ordered set of finite 3D points with optional per-point scalars.

    Points are stored as a read-only ``(n, 3)`` float64 array. Attributes are
    named 1-D arrays of length ``n``; they are also frozen once attached.
    """

    __slots__ = ("_points", "_attributes")

    def __init__(self, points, attributes: Optional[Mapping[str, np.ndarray]] = None):
        pts = np.array(points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(pts), axis=1))[0])
            raise ValueError(f"point {bad} has non-finite coordinates")
        pts.setflags(write=False)
        self._points = pts
        self._attributes: dict[str, np.ndarray] = {}
        for name, values in (attributes or {}).items():
            self._attributes[name] = self._check_attribute(name, values)

    def _check_attribute(self, name: str, values) -> np.ndarray:
        arr = np.array(values, copy=True)
        if arr.ndim != 1 or arr.shape[0] != len(self):
            raise ValueError(
                f"attribute {name!r} has shape {arr.shape}, expected ({len(self)},)"
            )
        arr.setflags(write=False)
        return arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def attributes(self) -> dict[str, np.ndarray]:
        return dict(self._attributes)

    def __len__(self) -> int:
        return self._points.shape[0]

    def __repr__(self) -> str:
        names = ", ".join(self._attributes) or "none"
        return f"PointCloud(n={len(self)}, attributes={names})"

    def attribute(self, name: str) -> np.ndarray:
        try:
            return self._attributes[name]
        except KeyError:
            raise UnknownAttributeError(name) from None

    def with_attributes(self, **attrs) -> "PointCloud":
        """Return a copy with ``attrs`` added or replaced."""
        merged = dict(self._attributes)
        merged.update(attrs)
        return PointCloud(self._points, merged)

    def select(self, indices) -> "PointCloud":
        idx = np.asarray(indices, dtype=np.intp)
        return PointCloud(
            self._points[idx], {k: v[idx] for k, v in self._attributes.items()}
        )

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self) == 0:
            raise ValueError("empty cloud has no bounds")
        return self._points.min(axis=0), self._points.max(axis=0)

    @classmethod
    def concatenate(cls, clouds) -> "PointCloud":
        clouds = list(clouds)
        if not clouds:
            return cls(np.empty((0, 3)))
        return cls(np.concatenate([c.points for c in clouds], axis=0))


@dataclass(frozen=True)
class VoxelGridSpec:
    voxel_len: float
    origin: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.voxel_len) and self.voxel_len > 0):
            raise ValueError(f"voxel_len must be positive and finite, got {self.voxel_len}")
        if self.origin is not None:
            object.__setattr__(self, "origin", as_point(self.origin))


def voxel_keys(points: np.ndarray, voxel_len: float, origin: np.ndarray) -> np.ndarray:
    """Integer voxel coordinates ``floor((p - origin) / voxel_len)`` per point."""
    return np.floor((points - origin) / voxel_len).astype(np.int64)


def voxel_downsample_indices(cloud: PointCloud, spec: VoxelGridSpec) -> np.ndarray:
    """Indices of the voxel representatives, in ascending order.

    One representative per occupied voxel: the member point closest to the
    centroid of that voxel's points, lowest index on ties.
    """
    n = len(cloud)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    pts = cloud.points
    origin = spec.origin if spec.origin is not None else pts.min(axis=0)
    ijk = voxel_keys(pts, spec.voxel_len, origin)
    ijk -= ijk.min(axis=0)
    dims = ijk.max(axis=0) + 1
    if float(np.prod(dims.astype(np.float64))) < 2.0**62:
        linear = ijk[:, 0] + dims[0] * (ijk[:, 1] + dims[1] * ijk[:, 2])
        _, inverse = np.unique(linear, return_inverse=True)
    else:
        _, inverse = np.unique(ijk, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    nvox = int(inverse.max()) + 1
    counts = np.bincount(inverse, minlength=nvox).astype(np.float64)
    centroids = np.empty((nvox, 3))
    for axis in range(3):
        centroids[:, axis] = np.bincount(inverse, weights=pts[:, axis], minlength=nvox) / counts
    dist2 = np.sum((pts - centroids[inverse]) ** 2, axis=1)
    # stable lexsort: voxel, then distance, then original index
    order = np.lexsort((dist2, inverse))
    first = np.ones(n, dtype=bool)
    first[1:] = inverse[order][1:] != inverse[order][:-1]
    return np.sort(order[first])


def voxel_downsample(cloud: PointCloud, spec: VoxelGridSpec) -> PointCloud:
    """Uniformly resample ``cloud`` to at most one point per voxel.

    Output points are members of the input cloud, kept in their original
    relative order, so a grid finer than the point spacing returns the input
    unchanged.
    """
    return cloud.select(voxel_downsample_indices(cloud, spec))
