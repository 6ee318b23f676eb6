"""Compiled pairwise base-kernel reductions.

Same contract as ``distreg._pairwise_np``: means of base-kernel values
between bags, evaluated pair by pair with no intermediate kernel matrix.
Distances for one source point are staged in a small buffer so the exp
loop runs over contiguous memory.
"""

from libc.math cimport exp, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

GAUSSIAN = 0
LAPLACIAN = 1


def bag_means(const double[:, ::1] pts_a, const cnp.int64_t[::1] starts_a,
              const double[:, ::1] pts_b, const cnp.int64_t[::1] starts_b,
              int family, double bandwidth, bint symmetric=False):
    """Matrix of mean base-kernel values between two bag collections.

    Mirrors ``_pairwise_np.bag_means``: stacked points plus bag-boundary
    offsets in, (n_a, n_b) matrix of double-sum means out.  ``symmetric``
    computes the upper triangle only and mirrors it.
    """
    cdef Py_ssize_t na = starts_a.shape[0] - 1
    cdef Py_ssize_t nb = starts_b.shape[0] - 1
    cdef Py_ssize_t p = pts_a.shape[1]
    cdef Py_ssize_t i, j, j0, ia, jb, k, a0, a1, b0, dj, da, max_db
    cdef double acc, rowacc, d2, diff
    cdef double invh2 = 1.0 / (bandwidth * bandwidth)
    cdef double invh = 1.0 / bandwidth

    max_db = 0
    for j in range(nb):
        if starts_b[j + 1] - starts_b[j] > max_db:
            max_db = starts_b[j + 1] - starts_b[j]

    buf_arr = np.empty(max_db, dtype=np.float64)
    out_arr = np.empty((na, nb), dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef double[:, ::1] out = out_arr

    with nogil:
        for i in range(na):
            a0 = starts_a[i]
            a1 = starts_a[i + 1]
            da = a1 - a0
            j0 = i if symmetric else 0
            for j in range(j0, nb):
                b0 = starts_b[j]
                dj = starts_b[j + 1] - b0
                acc = 0.0
                for ia in range(a0, a1):
                    for jb in range(dj):
                        d2 = 0.0
                        for k in range(p):
                            diff = pts_a[ia, k] - pts_b[b0 + jb, k]
                            d2 += diff * diff
                        buf[jb] = d2
                    rowacc = 0.0
                    if family == 0:  # gaussian
                        for jb in range(dj):
                            rowacc += exp(-buf[jb] * invh2)
                    else:  # laplacian
                        for jb in range(dj):
                            rowacc += exp(-sqrt(buf[jb]) * invh)
                    acc += rowacc
                out[i, j] = acc / (da * dj)
        if symmetric:
            for i in range(1, na):
                for j in range(i):
                    out[i, j] = out[j, i]
    return out_arr


def pair_mean(pts_a, pts_b, int family, double bandwidth):
    """Mean base-kernel value over all point pairs of two bags."""
    starts_a = np.array([0, pts_a.shape[0]], dtype=np.int64)
    starts_b = np.array([0, pts_b.shape[0]], dtype=np.int64)
    return float(bag_means(pts_a, starts_a, pts_b, starts_b,
                           family, bandwidth)[0, 0])
