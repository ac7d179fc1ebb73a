"""Pure-Python versions of the compiled kernels, with identical results."""
from __future__ import annotations

import numpy as np


def label_regions(mask) -> np.ndarray:
    """4-connected regions of a binary mask in raster order.

    Returns an ``(n, 5)`` int64 array of ``(area, row_min, row_max, col_min, col_max)``.
    """
    m = np.asarray(mask, dtype=bool)
    rows, cols = m.shape
    cells = set(zip(*np.nonzero(m)))
    out = []
    for r in range(rows):
        for c in range(cols):
            if (r, c) not in cells:
                continue
            cells.discard((r, c))
            stack = [(r, c)]
            area = 0
            rmin = rmax = r
            cmin = cmax = c
            while stack:
                rr, cc = stack.pop()
                area += 1
                rmin, rmax = min(rmin, rr), max(rmax, rr)
                cmin, cmax = min(cmin, cc), max(cmax, cc)
                for nb in ((rr - 1, cc), (rr + 1, cc), (rr, cc - 1), (rr, cc + 1)):
                    if nb in cells:
                        cells.discard(nb)
                        stack.append(nb)
            out.append((area, rmin, rmax, cmin, cmax))
    if not out:
        return np.zeros((0, 5), dtype=np.int64)
    return np.array(out, dtype=np.int64)


def subset_sum_counts(scores, n: int) -> np.ndarray:
    """Number of size-``n`` subsets of ``scores`` with each possible total."""
    scores = [int(s) for s in scores]
    total = sum(scores)
    dp = np.zeros((n + 1, total + 1))
    dp[0, 0] = 1.0
    reach = 0
    for i, w in enumerate(scores):
        reach += w
        for k in range(min(n, i + 1), 0, -1):
            if w == 0:
                dp[k, : reach + 1] += dp[k - 1, : reach + 1]
            else:
                dp[k, w: reach + 1] += dp[k - 1, : reach + 1 - w]
    return dp[n].copy()
