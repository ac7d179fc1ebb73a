"""Hot-loop kernels: the compiled extension when available, else pure Python.

Set ``MDNLAB_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("MDNLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def label_regions(mask) -> np.ndarray:
    return _impl.label_regions(np.ascontiguousarray(mask, dtype=np.uint8))


def subset_sum_counts(scores, n: int) -> np.ndarray:
    return _impl.subset_sum_counts(np.ascontiguousarray(scores, dtype=np.int64), int(n))
