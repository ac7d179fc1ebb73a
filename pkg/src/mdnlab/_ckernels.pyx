# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Pure-Python twins live in ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def label_regions(const unsigned char[:, :] mask):
    """4-connected regions of a binary mask in raster order.

    Returns an ``(n, 5)`` int64 array of ``(area, row_min, row_max, col_min, col_max)``.
    """
    cdef Py_ssize_t rows = mask.shape[0], cols = mask.shape[1]
    cdef Py_ssize_t total = rows * cols
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] seen_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef unsigned char[:, :] seen = seen_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] stack_arr = np.empty(total, dtype=np.int64)
    cdef long long[:] stack = stack_arr
    cdef list out = []
    cdef Py_ssize_t r, c, rr, cc, top, p
    cdef long long area, rmin, rmax, cmin, cmax
    for r in range(rows):
        for c in range(cols):
            if mask[r, c] == 0 or seen[r, c]:
                continue
            seen[r, c] = 1
            top = 0
            stack[top] = r * cols + c
            top += 1
            area = 0
            rmin = r
            rmax = r
            cmin = c
            cmax = c
            while top > 0:
                top -= 1
                p = stack[top]
                rr = p // cols
                cc = p - rr * cols
                area += 1
                if rr < rmin: rmin = rr
                if rr > rmax: rmax = rr
                if cc < cmin: cmin = cc
                if cc > cmax: cmax = cc
                if rr > 0 and mask[rr - 1, cc] and not seen[rr - 1, cc]:
                    seen[rr - 1, cc] = 1
                    stack[top] = p - cols
                    top += 1
                if rr < rows - 1 and mask[rr + 1, cc] and not seen[rr + 1, cc]:
                    seen[rr + 1, cc] = 1
                    stack[top] = p + cols
                    top += 1
                if cc > 0 and mask[rr, cc - 1] and not seen[rr, cc - 1]:
                    seen[rr, cc - 1] = 1
                    stack[top] = p - 1
                    top += 1
                if cc < cols - 1 and mask[rr, cc + 1] and not seen[rr, cc + 1]:
                    seen[rr, cc + 1] = 1
                    stack[top] = p + 1
                    top += 1
            out.append((area, rmin, rmax, cmin, cmax))
    if not out:
        return np.zeros((0, 5), dtype=np.int64)
    return np.array(out, dtype=np.int64)


def subset_sum_counts(const long long[:] scores, int n):
    """Number of size-``n`` subsets of ``scores`` with each possible total.

    ``scores`` must be non-negative integers. Entry ``s`` of the result counts
    the subsets whose scores sum to ``s``.
    """
    cdef Py_ssize_t N = scores.shape[0], i, k, s
    cdef long long total = 0, w
    for i in range(N):
        total += scores[i]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dp_arr = np.zeros((n + 1, total + 1), dtype=np.float64)
    cdef double[:, :] dp = dp_arr
    cdef long long reach = 0
    dp[0, 0] = 1.0
    for i in range(N):
        w = scores[i]
        reach += w
        k = n if i + 1 > n else i + 1
        while k >= 1:
            s = reach
            while s >= w:
                dp[k, s] += dp[k - 1, s - w]
                s -= 1
            k -= 1
    return dp_arr[n].copy()
