"""Slow, obviously-correct reference computations used as test oracles.

Nothing here imports the package's search, clustering or PCA code.
"""

import math

import numpy as np


def brute_radius(points, q, r):
    """Indices within distance r of q by a full scan (squared distances)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    d2 = ((points - np.asarray(q, dtype=float)) ** 2).sum(axis=1)
    return set(np.flatnonzero(d2 <= r * r).tolist())


def union_find_components(points, tol):
    """Connected components under distance <= tol via all-pairs union-find."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    ii, jj = np.nonzero(np.triu(d2 <= tol * tol, k=1))
    for a, b in zip(ii, jj):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [frozenset(g) for g in groups.values()]


def occupied_voxel_count(points, voxel_len, origin):
    """Number of distinct voxels touched, via a Python set of integer tuples."""
    cells = set()
    for p in np.asarray(points, dtype=float):
        cells.add(tuple(int(math.floor((p[k] - origin[k]) / voxel_len)) for k in range(3)))
    return len(cells)


def plane_normal_svd(points):
    """Least-squares plane normal: last right-singular vector of centred points."""
    pts = np.asarray(points, dtype=float)
    _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
    return vt[-1]


def in_box(point, center, dims, yaw):
    """Transform one point into the box frame and test the half extents."""
    dx, dy, dz = (point[k] - center[k] for k in range(3))
    c, s = math.cos(-yaw), math.sin(-yaw)
    lx = c * dx - s * dy
    ly = s * dx + c * dy
    return abs(lx) <= dims[0] / 2 and abs(ly) <= dims[1] / 2 and abs(dz) <= dims[2] / 2


def angle_deg(a, b):
    """Unsigned angle between two lines (sign of either vector ignored)."""
    a = np.asarray(a, float) / np.linalg.norm(a)
    b = np.asarray(b, float) / np.linalg.norm(b)
    return math.degrees(math.acos(min(1.0, abs(float(a @ b)))))
