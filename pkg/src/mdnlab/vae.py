"""MLP variational autoencoder: frames <-> D-dimensional latent vectors.

Encoder ``pixels -> 128 -> 64 -> (mu, logvar)`` and decoder
``D -> 64 -> 128 -> pixels`` with tanh hidden layers and a sigmoid output.
Parameters are a flat ``name -> array`` mapping so they can be fed to a
tape, an optimizer or the checkpoint writer without conversion.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, LatentDataset
from .errors import ParameterError, TrainingAborted
from .numcore import Adam, Rng, Tape, backward
from .numcore import functional as F
from .numcore import tensor as T

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VaeConfig:
    latent_dim: int = 8
    frame_shape: tuple[int, int] = (32, 32)
    encoder_hidden: tuple[int, ...] = (128, 64)
    decoder_hidden: tuple[int, ...] = (64, 128)
    epochs: int = 20
    batch: int = 32
    lr: float = 1e-3
    beta: float = 1.0
    seed: int = 0

    @property
    def pixels(self) -> int:
        return self.frame_shape[0] * self.frame_shape[1]

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        enc = (self.pixels, *self.encoder_hidden, 2 * self.latent_dim)
        dec = (self.latent_dim, *self.decoder_hidden, self.pixels)
        for prefix, sizes in (("enc", enc), ("dec", dec)):
            for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
                shapes[f"{prefix}.W{i}"] = (a, b)
                shapes[f"{prefix}.b{i}"] = (b,)
        return shapes


@dataclass
class VaeParams:
    config: VaeConfig
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


def init_vae(config: VaeConfig, rng: Rng | None = None) -> VaeParams:
    """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases."""
    rng = rng or Rng(config.seed)
    arrays = {}
    for name, shape in config.layer_shapes().items():
        if len(shape) == 2:
            arrays[name] = rng.standard_normals(shape[0] * shape[1]).reshape(shape) / math.sqrt(shape[0])
        else:
            arrays[name] = np.zeros(shape)
    return VaeParams(config, arrays)


def zero_vae(config: VaeConfig) -> VaeParams:
    return VaeParams(config, {k: np.zeros(s) for k, s in config.layer_shapes().items()})


def _n_layers(arrays, prefix: str) -> int:
    return sum(1 for k in arrays if k.startswith(prefix + ".W"))


def _mlp(x, arrays, prefix: str, out_act):
    n = _n_layers(arrays, prefix)
    for i in range(n):
        x = x @ arrays[f"{prefix}.W{i}"] + arrays[f"{prefix}.b{i}"]
        x = out_act(x) if i == n - 1 else (x.tanh() if isinstance(x, T.Tensor) else np.tanh(x))
    return x


def _flatten(frames, config: VaeConfig) -> np.ndarray:
    x = np.asarray(frames, dtype=np.float64)
    if x.shape[-2:] == config.frame_shape:
        x = x.reshape(*x.shape[:-2], config.pixels)
    if x.shape[-1] != config.pixels:
        raise ParameterError(f"frame has {x.shape[-1]} pixels, model expects {config.pixels}")
    return x


def encode(frame, params: VaeParams) -> tuple[np.ndarray, np.ndarray]:
    """``(mu, logvar)`` for one frame or a batch of frames."""
    x = _flatten(frame, params.config)
    out = _mlp(x, params.arrays, "enc", lambda v: v)
    d = params.config.latent_dim
    return out[..., :d], out[..., d:]


def decode(z, params: VaeParams) -> np.ndarray:
    """Frame(s) in (0, 1) for latent vector(s) ``z``."""
    z = np.asarray(z, dtype=np.float64)
    out = _mlp(z, params.arrays, "dec", F.sigmoid)
    return out.reshape(*z.shape[:-1], *params.config.frame_shape)


def reparameterize(mu, logvar, rng: Rng) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    eps = rng.standard_normals(mu.size).reshape(mu.shape)
    return mu + np.exp(0.5 * np.asarray(logvar, dtype=np.float64)) * eps


def elbo_loss(frame, reconstruction, mu, logvar, beta: float = 1.0) -> tuple[float, float, float]:
    """``(recon, kl, recon + beta * kl)`` for one frame.

    ``recon`` is the summed squared pixel error and ``kl`` the closed-form
    KL divergence from ``N(mu, exp(logvar))`` to the standard normal.
    """
    diff = np.asarray(frame, dtype=np.float64).reshape(-1) - np.asarray(reconstruction, dtype=np.float64).reshape(-1)
    recon = float(np.dot(diff, diff))
    mu = np.asarray(mu, dtype=np.float64)
    lv = np.asarray(logvar, dtype=np.float64)
    # expm1(lv) - lv >= 0 termwise, so kl never rounds negative
    kl = float(0.5 * np.sum(mu * mu + (np.expm1(lv) - lv)))
    return recon, kl, recon + beta * kl


def loss_tensor(tensors, frames: np.ndarray, eps: np.ndarray, beta: float, latent_dim: int):
    """Batch-mean ELBO loss on a tape; ``eps`` is the reparameterization noise."""
    out = _mlp(T.Tensor(frames), tensors, "enc", lambda v: v)
    mu = out[:, :latent_dim]
    logvar = out[:, latent_dim:]
    z = mu + (logvar * 0.5).exp() * eps
    recon = _mlp(z, tensors, "dec", T.sigmoid)
    diff = recon - frames
    rec = (diff * diff).sum()
    kl = ((mu * mu) + logvar.exp() - logvar - 1.0).sum() * 0.5
    return (rec + kl * beta) * (1.0 / frames.shape[0])


def train_vae(dataset, config: VaeConfig = VaeConfig(), params: VaeParams | None = None,
              progress=None) -> tuple[VaeParams, list[float]]:
    """Adam mini-batch training; returns the parameters and per-epoch mean loss.

    ``dataset`` is a :class:`Dataset` or an array of frames (uint8 bytes or
    floats in [0, 1]).
    """
    frames = dataset.frames if isinstance(dataset, Dataset) else np.asarray(dataset)
    if len(frames) == 0:
        raise ParameterError("cannot train a VAE on an empty dataset")
    scale = 1.0 / 255.0 if frames.dtype == np.uint8 else 1.0
    rng = Rng(config.seed)
    params = params or init_vae(config, Rng(rng.next_u64()))
    opt = Adam(params.arrays, lr=config.lr)
    n = len(frames)
    curve = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch):
            idx = np.sort(order[start:start + config.batch])
            x = _flatten(frames[idx].astype(np.float64) * scale, config)
            eps = rng.standard_normals(len(idx) * config.latent_dim).reshape(len(idx), config.latent_dim)
            tape = Tape()
            tensors = {k: tape.param(k, v) for k, v in params.arrays.items()}
            loss = loss_tensor(tensors, x, eps, config.beta, config.latent_dim)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingAborted(step, epoch, value)
            opt.step(backward(tape, loss))
            total += value * len(idx)
            step += 1
        curve.append(total / n)
        log.info("vae epoch %d loss %.4f", epoch, curve[-1])
        if progress:
            progress(epoch, curve[-1])
    return params, curve


def encode_dataset(dataset: Dataset, params: VaeParams, chunk: int = 4096) -> LatentDataset:
    """Deterministic latent means for every frame, keeping the episode structure."""
    mus = []
    for s in range(0, len(dataset), chunk):
        mu, _ = encode(dataset.float_frames(slice(s, s + chunk)), params)
        mus.append(mu)
    latents = np.concatenate(mus) if mus else np.zeros((0, params.config.latent_dim))
    return LatentDataset(
        latents=latents,
        actions=dataset.actions.copy(),
        starts=dataset.starts.copy(),
        lengths=dataset.lengths.copy(),
        seeds=list(dataset.seeds),
    )
