# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-search / neighbor kernels.

Mirrors ``pure.py`` operation for operation (see the arithmetic contract
there): identical sort order, accumulation order and comparison order, so
results match the fallback bit for bit. Inputs must be C-contiguous float64
without NaN.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _argsort_stable(const double* vals, cnp.int64_t* idx,
                          cnp.int64_t* tmp, Py_ssize_t n) noexcept nogil:
    # Bottom-up merge sort of idx by (vals[idx], idx): equals numpy's
    # stable argsort because keys are unique.
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef cnp.int64_t a, b
    for i in range(n):
        idx[i] = i
    while width < n:
        lo = 0
        while lo + width < n:
            mid = lo + width
            hi = mid + width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                a = idx[i]
                b = idx[j]
                if vals[a] < vals[b] or (vals[a] == vals[b] and a < b):
                    tmp[k] = a
                    i += 1
                else:
                    tmp[k] = b
                    j += 1
                k += 1
            while i < mid:
                tmp[k] = idx[i]
                i += 1
                k += 1
            while j < hi:
                tmp[k] = idx[j]
                j += 1
                k += 1
            for i in range(lo, hi):
                idx[i] = tmp[i]
            lo += 2 * width
        width *= 2


def best_split_classification(double[:, ::1] X, cnp.int64_t[::1] y_codes,
                              int n_classes, int min_leaf):
    """See pure.best_split_classification."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    if n < 2 * min_leaf:
        return False, -1, 0.0
    col_arr = np.empty(n, dtype=np.float64)
    order_arr = np.empty(n, dtype=np.int64)
    tmp_arr = np.empty(n, dtype=np.int64)
    total_arr = np.zeros(n_classes, dtype=np.int64)
    left_arr = np.empty(n_classes, dtype=np.int64)
    cdef double[::1] col = col_arr
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.int64_t[::1] tmp = tmp_arr
    cdef cnp.int64_t[::1] total = total_arr
    cdef cnp.int64_t[::1] left = left_arr
    cdef Py_ssize_t i, f, p
    cdef cnp.int64_t c, total_sq, left_sq, right_sq, nl
    cdef double parent, best_score, score
    cdef int best_feature = -1
    cdef double best_threshold = 0.0

    for i in range(n):
        total[y_codes[i]] += 1
    total_sq = 0
    for c in range(n_classes):
        total_sq += total[c] * total[c]
    parent = <double>total_sq / n
    best_score = parent

    for f in range(m):
        for i in range(n):
            col[i] = X[i, f]
        _argsort_stable(&col[0], &order[0], &tmp[0], n)
        for c in range(n_classes):
            left[c] = 0
        left_sq = 0
        right_sq = total_sq
        for p in range(n - 1):
            c = y_codes[order[p]]
            left_sq += 2 * left[c] + 1
            right_sq += -2 * (total[c] - left[c]) + 1
            left[c] += 1
            nl = p + 1
            if nl < min_leaf or n - nl < min_leaf:
                continue
            if not col[order[p]] < col[order[p + 1]]:
                continue
            score = <double>left_sq / <double>nl + <double>right_sq / <double>(n - nl)
            if score > best_score:
                best_score = score
                best_feature = <int>f
                best_threshold = col[order[p]]
    return best_feature >= 0, best_feature, best_threshold


def best_split_regression(double[:, ::1] X, double[::1] y, int min_leaf):
    """See pure.best_split_regression."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    if n < 2 * min_leaf:
        return False, -1, 0.0
    col_arr = np.empty(n, dtype=np.float64)
    order_arr = np.empty(n, dtype=np.int64)
    tmp_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] col = col_arr
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.int64_t[::1] tmp = tmp_arr
    cdef Py_ssize_t i, f, p
    cdef double total = 0.0
    cdef double sl, nl, score, best_score
    cdef int best_feature = -1
    cdef double best_threshold = 0.0

    for i in range(n):
        total += y[i]
    best_score = total * total / n

    for f in range(m):
        for i in range(n):
            col[i] = X[i, f]
        _argsort_stable(&col[0], &order[0], &tmp[0], n)
        sl = 0.0
        for p in range(n - 1):
            sl += y[order[p]]
            nl = <double>(p + 1)
            if p + 1 < min_leaf or n - (p + 1) < min_leaf:
                continue
            if not col[order[p]] < col[order[p + 1]]:
                continue
            score = sl * sl / nl + (total - sl) * (total - sl) / (n - nl)
            if score > best_score:
                best_score = score
                best_feature = <int>f
                best_threshold = col[order[p]]
    return best_feature >= 0, best_feature, best_threshold


def knn_query(double[:, ::1] train, double[:, ::1] queries, int k):
    """See pure.knn_query."""
    cdef Py_ssize_t nt = train.shape[0]
    cdef Py_ssize_t m = train.shape[1]
    cdef Py_ssize_t nq = queries.shape[0]
    out_arr = np.empty((nq, k), dtype=np.int64)
    dist_arr = np.empty(nt, dtype=np.float64)
    idx_arr = np.empty(nt, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef double[::1] dist = dist_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t qi, ti, j, s, t, best
    cdef double d, diff
    cdef cnp.int64_t swap

    for qi in range(nq):
        for ti in range(nt):
            d = 0.0
            for j in range(m):
                diff = queries[qi, j] - train[ti, j]
                d += diff * diff
            dist[ti] = d
            idx[ti] = ti
        for s in range(k):
            best = s
            for t in range(s + 1, nt):
                if dist[idx[t]] < dist[idx[best]] or (
                    dist[idx[t]] == dist[idx[best]] and idx[t] < idx[best]
                ):
                    best = t
            swap = idx[s]
            idx[s] = idx[best]
            idx[best] = swap
            out[qi, s] = idx[s]
    return out_arr
