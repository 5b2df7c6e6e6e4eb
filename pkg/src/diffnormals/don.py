"""Difference of Normals over a pair of support radii."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import PointCloud
from .errors import InvalidParamsError, InvalidThresholdError
from .normals import DecimationSpec, NormalMap, UnitNormal, estimate_normal_map

DEFAULT_THRESHOLD = 0.25
DEFAULT_SCALE_RATIO = 10.0

AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class DoNParams:
    r1: float
    r2: float

    def __post_init__(self):
        r1, r2 = float(self.r1), float(self.r2)
        if not (math.isfinite(r1) and math.isfinite(r2) and 0 < r1 < r2):
            raise InvalidParamsError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)

    @classmethod
    def from_small(cls, r1: float, ratio: float = DEFAULT_SCALE_RATIO) -> "DoNParams":
        return cls(r1, r1 * ratio)


def don_pair(n1: UnitNormal, n2: UnitNormal) -> Optional[np.ndarray]:
    """``(n1 - n2) / 2`` after turning ``n2`` to within 90 degrees of ``n1``.

    Returns ``None`` if either normal is invalid.
    """
    if not (n1.valid and n2.valid):
        return None
    a, b = n1.vector, n2.vector
    if float(a @ b) < 0.0:
        b = -b
    return (a - b) / 2.0


def don_vectors(n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """Row-wise :func:`don_pair` for arrays of unit normals (validity ignored)."""
    flip = np.einsum("ij,ij->i", n1, n2) < 0.0
    n2 = np.where(flip[:, None], -n2, n2)
    return (n1 - n2) / 2.0


@dataclass
class DoNField:
    vectors: np.ndarray
    valid: np.ndarray
    params: DoNParams

    def __len__(self) -> int:
        return len(self.valid)

    @property
    def magnitudes(self) -> np.ndarray:
        """Per-point ``|delta|``; NaN where invalid."""
        mags = np.linalg.norm(self.vectors, axis=1)
        mags[~self.valid] = np.nan
        return mags

    def attributes(self) -> dict[str, np.ndarray]:
        """Per-point scalars for file output; invalid points carry -1."""
        mags = np.where(self.valid, np.linalg.norm(self.vectors, axis=1), -1.0)
        vec = np.where(self.valid[:, None], self.vectors, 0.0)
        return {"don_x": vec[:, 0], "don_y": vec[:, 1], "don_z": vec[:, 2], "don_mag": mags}


def field_from_maps(small: NormalMap, large: NormalMap, params: DoNParams) -> DoNField:
    if len(small) != len(large):
        raise ValueError("normal maps differ in length")
    valid = small.valid & large.valid
    vectors = don_vectors(small.normals, large.normals)
    vectors[~valid] = 0.0
    return DoNField(vectors, valid, params)


def compute_don_field(
    cloud: PointCloud,
    params: DoNParams,
    decim: Optional[DecimationSpec] = None,
    *,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> DoNField:
    if not isinstance(params, DoNParams):
        params = DoNParams(*params)
    small = estimate_normal_map(cloud, params.r1, decim, threads=threads, backend=backend)
    large = estimate_normal_map(cloud, params.r2, decim, threads=threads, backend=backend)
    return field_from_maps(small, large, params)


def filter_by_magnitude(field: DoNField, t: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Indices of valid points with ``|delta| >= t``."""
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise InvalidThresholdError(f"threshold must lie in [0, 1], got {t}")
    mags = np.linalg.norm(field.vectors, axis=1)
    return np.flatnonzero(field.valid & (mags >= t))


def filter_by_component(field: DoNField, axis: str, t: float) -> np.ndarray:
    """Indices of valid points whose ``axis`` component is ``>= t``."""
    try:
        k = AXES[axis]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}") from None
    return np.flatnonzero(field.valid & (field.vectors[:, k] >= float(t)))
