"""Pure numpy/scipy implementation of the per-point PCA normal kernel."""

from __future__ import annotations

import numpy as np

# normal components this close to zero are round-off and never decide the sign
SIGN_ZERO_TOL = 1e-9


def orient_canonical(normals: np.ndarray, zero_tol: float = SIGN_ZERO_TOL) -> np.ndarray:
    """Flip rows so the first component with ``|c| > zero_tol`` is positive.

    Components within ``zero_tol`` of zero count as zero, so round-off
    around an exact zero cannot decide the sign.
    """
    big = np.abs(normals) > zero_tol
    lead = normals[np.arange(len(normals)), np.argmax(big, axis=1)]
    sign = np.where(lead < 0.0, -1.0, 1.0)
    return normals * sign[:, None]


def normals_from_covariances(
    cov: np.ndarray, counts: np.ndarray, rel_gap: float
) -> tuple[np.ndarray, np.ndarray]:
    """Smallest-eigenvalue eigenvectors of a stack of 3x3 covariances."""
    m = len(cov)
    normals = np.zeros((m, 3))
    valid = np.zeros(m, dtype=bool)
    enough = counts >= 3
    if not enough.any():
        return normals, valid
    w, v = np.linalg.eigh(cov[enough])
    ok = (w[:, 1] - w[:, 0]) > rel_gap * w[:, 2]
    vec = v[:, :, 0]
    vec = vec / np.linalg.norm(vec, axis=1, keepdims=True)
    vec = orient_canonical(vec)
    rows = np.flatnonzero(enough)
    normals[rows[ok]] = vec[ok]
    valid[rows[ok]] = True
    return normals, valid


def normals_range(tree, pts, queries, radius, rel_gap, out, valid, counts, start, stop):
    """Same contract as the compiled kernel, neighbour lists from a k-d tree."""
    q = queries[start:stop]
    m = len(q)
    if tree is None:
        counts[start:stop] = 0
        valid[start:stop] = 0
        out[start:stop] = 0.0
        return
    hits = tree.query_ball_point(q, radius, return_sorted=True)
    lengths = np.fromiter((len(h) for h in hits), dtype=np.int64, count=m)
    flat = np.concatenate([np.asarray(h, dtype=np.intp) for h in hits]) if m else np.empty(0, np.intp)
    seg = np.repeat(np.arange(m), lengths)
    d = pts[flat] - q[seg]
    n = lengths.astype(np.float64)
    safe = np.where(n > 0, n, 1.0)
    mean = np.column_stack(
        [np.bincount(seg, weights=d[:, k], minlength=m) for k in range(3)]
    ) / safe[:, None]
    cov = np.empty((m, 3, 3))
    for a in range(3):
        for b in range(a, 3):
            s = np.bincount(seg, weights=d[:, a] * d[:, b], minlength=m) / safe
            cov[:, a, b] = cov[:, b, a] = s - mean[:, a] * mean[:, b]
    normals, ok = normals_from_covariances(cov, lengths, rel_gap)
    out[start:stop] = normals
    valid[start:stop] = ok
    counts[start:stop] = lengths
