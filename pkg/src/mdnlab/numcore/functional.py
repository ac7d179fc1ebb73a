"""Numerically stable primitives on plain arrays (no tape)."""
from __future__ import annotations

import numpy as np

from ..errors import ParameterError


def softmax(v, temperature: float = 1.0) -> np.ndarray:
    """Temperature softmax along the last axis, via max-subtraction."""
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    x = np.asarray(v, dtype=np.float64) / temperature
    e = np.exp(x - np.max(x, axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def logsumexp(v) -> float:
    x = np.asarray(v, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ParameterError("logsumexp of an empty vector")
    if x.size == 1:
        return float(x[0])
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


def sigmoid(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
