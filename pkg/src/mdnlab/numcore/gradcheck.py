"""Central finite-difference verification of tape gradients."""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from ..errors import ParameterError
from .tensor import Tape, Tensor, backward

LossFn = Callable[[Mapping[str, Tensor]], Tensor]


def analytic_gradients(loss_fn: LossFn, params: Mapping[str, np.ndarray]) -> tuple[float, dict[str, np.ndarray]]:
    tape = Tape()
    tensors = {name: tape.param(name, value) for name, value in params.items()}
    out = loss_fn(tensors)
    return out.item(), backward(tape, out)


def _evaluate(loss_fn: LossFn, params: Mapping[str, np.ndarray]):
    out = loss_fn({name: Tensor(v) for name, v in params.items()}).data
    value = out.reshape(-1)[0]
    if not np.isfinite(value):
        raise FloatingPointError(f"loss evaluated to {value}")
    return value


def finite_difference_check(
    loss_fn: LossFn,
    params: Mapping[str, np.ndarray],
    epsilon: float = 1e-6,
    extended: bool = True,
) -> float:
    """Worst elementwise relative error between backward() and central differences.

    The relative error of each element is ``|a - n| / max(|a|, |n|, 1e-12)``.
    ``loss_fn`` receives a mapping of parameter tensors and must be
    deterministic.

    With ``extended`` (the default) the perturbed losses are evaluated in
    ``numpy.longdouble``, which shrinks the cancellation error of
    ``f(p + eps) - f(p - eps)`` by about three orders of magnitude on x86;
    the analytic side is always plain float64.
    """
    if not 1e-8 <= epsilon <= 1e-4:
        raise ParameterError(f"epsilon must lie in [1e-8, 1e-4], got {epsilon}")
    base = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    _, grads = analytic_gradients(loss_fn, base)
    dtype = np.longdouble if extended else np.float64
    work = {k: v.astype(dtype) for k, v in base.items()}
    worst = 0.0
    for name, value in work.items():
        flat = value.reshape(-1)
        analytic = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = _evaluate(loss_fn, work)
            flat[i] = orig - epsilon
            f_minus = _evaluate(loss_fn, work)
            flat[i] = orig
            numeric = float((f_plus - f_minus) / (2 * dtype(epsilon)))
            a = analytic[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, err)
    return worst
