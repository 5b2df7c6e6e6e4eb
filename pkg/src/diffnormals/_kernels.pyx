# cython: language_level=3
"""Compiled per-point PCA normal kernel.

Neighbour search walks a cell grid whose cell edge is at least the support
radius, so the 27 cells around a query cover its whole ball. Cells are
located by binary search over the sorted occupied-cell keys.
"""

from libc.math cimport fabs, floor, sqrt

ctypedef long long i64

# normal components this close to zero are round-off and never decide the sign
cdef double sign_tol = 1e-9
SIGN_ZERO_TOL = sign_tol


cdef inline Py_ssize_t _find(const i64[::1] keys, i64 key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == key:
        return lo
    return -1


cdef void _jacobi3(double a[3][3], double w[3], double v[3][3]) noexcept nogil:
    cdef int sweep, p, q, k, i, j
    cdef double off, scale, apq, theta, t, c, s, x, y
    for i in range(3):
        for j in range(3):
            v[i][j] = 1.0 if i == j else 0.0
    for sweep in range(32):
        off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]
        scale = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2]
        if off == 0.0 or off <= 1e-40 * scale:
            break
        for p in range(2):
            for q in range(p + 1, 3):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(3):
                    x = a[k][p]
                    y = a[k][q]
                    a[k][p] = c * x - s * y
                    a[k][q] = s * x + c * y
                for k in range(3):
                    x = a[p][k]
                    y = a[q][k]
                    a[p][k] = c * x - s * y
                    a[q][k] = s * x + c * y
                a[p][q] = 0.0
                a[q][p] = 0.0
                for k in range(3):
                    x = v[k][p]
                    y = v[k][q]
                    v[k][p] = c * x - s * y
                    v[k][q] = s * x + c * y
    for i in range(3):
        w[i] = a[i][i]


cdef int _normal_from_moments(
    i64 n, double sx, double sy, double sz,
    double sxx, double sxy, double sxz, double syy, double syz, double szz,
    double rel_gap, double out[3],
) noexcept nogil:
    """Smallest-eigenvalue direction of the neighbourhood covariance.

    Returns 0 when fewer than 3 points or the two smallest eigenvalues are
    within ``rel_gap`` of the largest.
    """
    cdef double a[3][3]
    cdef double v[3][3]
    cdef double w[3]
    cdef double mx, my, mz, inv, norm, tmp
    cdef int i0, i1, i2, k
    if n < 3:
        return 0
    inv = 1.0 / <double>n
    mx = sx * inv
    my = sy * inv
    mz = sz * inv
    a[0][0] = sxx * inv - mx * mx
    a[0][1] = sxy * inv - mx * my
    a[0][2] = sxz * inv - mx * mz
    a[1][1] = syy * inv - my * my
    a[1][2] = syz * inv - my * mz
    a[2][2] = szz * inv - mz * mz
    a[1][0] = a[0][1]
    a[2][0] = a[0][2]
    a[2][1] = a[1][2]
    _jacobi3(a, w, v)
    # ascending order of eigenvalues: i0 <= i1 <= i2
    i0 = 0
    i1 = 1
    i2 = 2
    if w[i0] > w[i1]:
        i0, i1 = i1, i0
    if w[i1] > w[i2]:
        i1, i2 = i2, i1
    if w[i0] > w[i1]:
        i0, i1 = i1, i0
    if not (w[i1] - w[i0] > rel_gap * w[i2]):
        return 0
    norm = sqrt(v[0][i0] * v[0][i0] + v[1][i0] * v[1][i0] + v[2][i0] * v[2][i0])
    for k in range(3):
        out[k] = v[k][i0] / norm
    # canonical sign: first component clear of round-off noise is positive
    for k in range(3):
        if fabs(out[k]) > sign_tol:
            if out[k] < 0.0:
                out[0] = -out[0]
                out[1] = -out[1]
                out[2] = -out[2]
            break
    return 1


def normals_range(
    const double[:, ::1] pts,
    const i64[::1] cell_keys,
    const i64[::1] cell_start,
    const i64[::1] cell_stop,
    const double[::1] origin,
    double cell,
    const i64[::1] dims,
    const double[:, ::1] queries,
    double radius,
    double rel_gap,
    double[:, ::1] out,
    unsigned char[::1] valid,
    i64[::1] counts,
    Py_ssize_t start,
    Py_ssize_t stop,
):
    """Estimate normals for ``queries[start:stop]`` into pre-assigned slots.

    ``pts`` must be ordered by cell key with ``cell_start/stop`` delimiting
    each occupied cell listed in ascending ``cell_keys``.
    """
    cdef Py_ssize_t i, j, slot
    cdef i64 cx, cy, cz, ix, iy, iz, key, n
    cdef i64 nx = dims[0], ny = dims[1], nz = dims[2]
    cdef double qx, qy, qz, dx, dy, dz, d2
    cdef double r2 = radius * radius
    cdef double sx, sy, sz, sxx, sxy, sxz, syy, syz, szz
    cdef double normal[3]
    with nogil:
        for i in range(start, stop):
            qx = queries[i, 0]
            qy = queries[i, 1]
            qz = queries[i, 2]
            cx = <i64>floor((qx - origin[0]) / cell)
            cy = <i64>floor((qy - origin[1]) / cell)
            cz = <i64>floor((qz - origin[2]) / cell)
            n = 0
            sx = sy = sz = 0.0
            sxx = sxy = sxz = syy = syz = szz = 0.0
            for iz in range(cz - 1, cz + 2):
                if iz < 0 or iz >= nz:
                    continue
                for iy in range(cy - 1, cy + 2):
                    if iy < 0 or iy >= ny:
                        continue
                    for ix in range(cx - 1, cx + 2):
                        if ix < 0 or ix >= nx:
                            continue
                        key = ix + nx * (iy + ny * iz)
                        slot = _find(cell_keys, key)
                        if slot < 0:
                            continue
                        for j in range(cell_start[slot], cell_stop[slot]):
                            dx = pts[j, 0] - qx
                            dy = pts[j, 1] - qy
                            dz = pts[j, 2] - qz
                            d2 = dx * dx + dy * dy + dz * dz
                            if d2 <= r2:
                                n += 1
                                sx += dx
                                sy += dy
                                sz += dz
                                sxx += dx * dx
                                sxy += dx * dy
                                sxz += dx * dz
                                syy += dy * dy
                                syz += dy * dz
                                szz += dz * dz
            counts[i] = n
            if _normal_from_moments(n, sx, sy, sz, sxx, sxy, sxz, syy, syz, szz,
                                    rel_gap, normal):
                valid[i] = 1
                out[i, 0] = normal[0]
                out[i, 1] = normal[1]
                out[i, 2] = normal[2]
            else:
                valid[i] = 0
                out[i, 0] = 0.0
                out[i, 1] = 0.0
                out[i, 2] = 0.0


def jacobi_eigen(double[:, ::1] cov):
    """Eigenvalues and eigenvector matrix (vectors as columns) of one symmetric 3x3."""
    cdef double a[3][3]
    cdef double v[3][3]
    cdef double w[3]
    cdef int i, j
    for i in range(3):
        for j in range(3):
            a[i][j] = cov[i, j]
    _jacobi3(a, w, v)
    return [w[0], w[1], w[2]], [[v[i][j] for j in range(3)] for i in range(3)]
