"""Seeded, platform-independent random number generation.

The generator is SplitMix64 (Steele, Lea & Flood 2014): a Weyl sequence
``state += 0x9E3779B97F4A7C15`` passed through a fixed 64-bit mixing
function. Uniform reals take the top 53 bits of each output, so every draw
lies in ``[0, 1)`` and the stream is identical on every platform.

Normal variates use the Box-Muller transform. One pair of uniform draws
produces two normals; the second one is cached on the generator and
returned by the next normal request. Uniform draws never touch the cache.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for ``(seed, key0, key1, ...)``; distinct keys give unrelated streams."""
    s = mix64(seed ^ 0x6A09E667F3BCC909)
    for k in keys:
        s = mix64(s + GAMMA * (1 + (k & MASK64)))
    return s


class Rng:
    """SplitMix64 stream with a Box-Muller normal cache."""

    __slots__ = ("state", "_spare")

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64
        self._spare: float | None = None

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms, bit-identical to ``n`` successive :meth:`uniform` calls."""
        if n <= 0:
            return np.empty(0)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix64_array(z)
        self.state = (self.state + n * GAMMA) & MASK64
        return (out >> np.uint64(11)).astype(np.float64) * _INV53

    def integer(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ParameterError(f"integer range must be positive, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def _pair(self) -> tuple[float, float]:
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        theta = 2.0 * math.pi * u2
        return r * math.cos(theta), r * math.sin(theta)

    def standard_normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        z0, z1 = self._pair()
        self._spare = z1
        return z0

    def standard_normals(self, n: int) -> np.ndarray:
        """``n`` normals, identical to ``n`` successive :meth:`standard_normal` calls."""
        out = np.empty(n)
        if n <= 0:
            return out
        i = 0
        if self._spare is not None:
            out[0] = self._spare
            self._spare = None
            i = 1
        remaining = n - i
        pairs = (remaining + 1) // 2
        if pairs:
            u = self.uniforms(2 * pairs)
            r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
            theta = 2.0 * np.pi * u[1::2]
            z = np.empty(2 * pairs)
            z[0::2] = r * np.cos(theta)
            z[1::2] = r * np.sin(theta)
            out[i:] = z[:remaining]
            if remaining % 2:
                self._spare = float(z[-1])
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        u = self.uniforms(max(n - 1, 0))
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[k] * (i + 1)), i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def gaussian_sample(rng: Rng, mu: float, sigma: float) -> float:
    if sigma < 0:
        raise ParameterError(f"sigma must be non-negative, got {sigma}")
    return mu + sigma * rng.standard_normal()
