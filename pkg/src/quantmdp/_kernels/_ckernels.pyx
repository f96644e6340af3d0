# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: brute-force nearest level search and box histogramming."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def nearest_brute(const double[:, ::1] points, const double[:, ::1] levels):
    """Index of the nearest level for every row of ``points``.

    Squared Euclidean distance, accumulated axis by axis; the first level
    reaching the minimum wins, so ties go to the smallest index.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t k = levels.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double best, dist, diff
    cdef Py_ssize_t best_j
    if levels.shape[1] != d:
        raise ValueError("points and levels must share their dimension")
    if k == 0:
        raise ValueError("empty codebook")
    out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] res = out
    with nogil:
        for i in range(n):
            best = 0.0
            for t in range(d):
                diff = points[i, t] - levels[0, t]
                best = best + diff * diff
            best_j = 0
            for j in range(1, k):
                dist = 0.0
                for t in range(d):
                    diff = points[i, t] - levels[j, t]
                    dist = dist + diff * diff
                if dist < best:
                    best = dist
                    best_j = j
            res[i] = best_j
    return out


def bin_counts(const double[:, ::1] samples, const double[::1] lo,
               const double[::1] hi, Py_ssize_t bins):
    """Counts per cell of a regular grid on a box, plus a trailing overflow cell.

    Cells are half-open ``[lo + i*w, lo + (i+1)*w)`` (edges evaluated exactly in
    that form) except the last one on each axis, which also holds ``hi``. Cell order is row-major over the axes.
    """
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t d = samples.shape[1]
    cdef Py_ssize_t i, t, cell, j, ncells = 1
    cdef double v, w
    cdef bint outside
    for t in range(d):
        ncells *= bins
    out = np.zeros(ncells + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = out
    with nogil:
        for i in range(n):
            cell = 0
            outside = False
            for t in range(d):
                v = samples[i, t]
                if not (v >= lo[t] and v <= hi[t]):
                    outside = True
                    break
                w = (hi[t] - lo[t]) / bins
                if w > 0:
                    j = <Py_ssize_t>floor((v - lo[t]) / w)
                else:
                    j = 0
                if j >= bins:
                    j = bins - 1
                elif j < 0:
                    j = 0
                if w > 0:
                    # the division can round across an edge; edges are lo + j*w
                    if j > 0 and v < lo[t] + j * w:
                        j -= 1
                    elif j < bins - 1 and v >= lo[t] + (j + 1) * w:
                        j += 1
                cell = cell * bins + j
            if outside:
                counts[ncells] += 1
            else:
                counts[cell] += 1
    return out
