"""Tensor arithmetic, reverse-mode differentiation, stable primitives and RNG."""
from .functional import logsumexp, sigmoid, softmax
from .gradcheck import analytic_gradients, finite_difference_check
from .optim import Adam
from .rng import Rng, derive_seed, gaussian_sample
from .tensor import Tape, Tensor, backward, concat, log_softmax
from . import tensor as ops

__all__ = [
    "Adam", "Rng", "Tape", "Tensor", "analytic_gradients", "backward", "concat",
    "derive_seed", "finite_difference_check", "gaussian_sample", "log_softmax",
    "logsumexp", "ops", "sigmoid", "softmax",
]
