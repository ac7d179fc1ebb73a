"""Two-sided Mann-Whitney U test with midranks for ties.

Small samples (``min(n, m) <= 8``) use the exact permutation distribution
of the rank sum given the observed tie pattern: every one of the
``C(n + m, n)`` ways to split the pooled ranks is counted, through a
subset-sum table (see :func:`mdnlab.kernels.subset_sum_counts`) rather
than by listing the splits. Larger samples use the normal approximation
with tie-corrected variance and a 0.5 continuity correction.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .. import kernels
from ..errors import ParameterError

EXACT_MAX = 8


class MannWhitneyResult(NamedTuple):
    u: float
    p: float


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def tie_term(ranks: np.ndarray) -> float:
    """Sum of ``t^3 - t`` over groups of tied ranks."""
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(np.float64) ** 3 - counts))


def _exact_p(doubled: np.ndarray, n: int, s_obs: int) -> float:
    N = len(doubled)
    counts = kernels.subset_sum_counts(doubled, n)
    center = n * (N + 1)  # the doubled rank-sum mean
    s = np.arange(len(counts))
    extreme = np.abs(s - center) >= abs(s_obs - center)
    return float(min(1.0, counts[extreme].sum() / counts.sum()))


def _normal_p(u: float, n: int, m: int, ties: float) -> float:
    N = n + m
    var = n * m / 12.0 * ((N + 1) - ties / (N * (N - 1)))
    if var <= 0:
        return 1.0
    dev = max(abs(u - n * m / 2.0) - 0.5, 0.0)
    return float(min(1.0, math.erfc(dev / math.sqrt(var) / math.sqrt(2.0))))


def mann_whitney_u(a: Sequence[float], b: Sequence[float], method: str = "auto") -> MannWhitneyResult:
    """``U`` for sample ``a`` and the two-sided p-value.

    ``method`` is ``"auto"``, ``"exact"`` or ``"normal"``.
    """
    n, m = len(a), len(b)
    if n < 1 or m < 1:
        raise ParameterError(f"both samples need at least one value, got sizes {n} and {m}")
    if method not in ("auto", "exact", "normal"):
        raise ParameterError(f"unknown method {method!r}")
    pooled = np.concatenate([np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)])
    ranks = midranks(pooled)
    r_a = float(ranks[:n].sum())
    u = r_a - n * (n + 1) / 2.0
    if np.all(pooled == pooled[0]):
        return MannWhitneyResult(u, 1.0)
    if method == "exact" or (method == "auto" and min(n, m) <= EXACT_MAX):
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        return MannWhitneyResult(u, _exact_p(doubled, n, int(doubled[:n].sum())))
    return MannWhitneyResult(u, _normal_p(u, n, m, tie_term(ranks)))
