"""Single-layer LSTM with a mixture-density head over the next latent vector.

The network models ``P(z[t+1] | a[t], z[t], h[t])``. Its input at each step
is the latent vector concatenated with a one-hot action; the head projects
the hidden state to ``K`` mixture logits, ``K x D`` means and ``K x D`` raw
scales (``sigma = exp(raw)``).

Gate columns of the LSTM weight matrices are laid out ``[i, f, g, o]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import LatentDataset
from .errors import ParameterError, TrainingAborted
from .numcore import Adam, Rng, Tape, backward
from .numcore import functional as F
from .numcore import tensor as T

log = logging.getLogger(__name__)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
SIGMA_FLOOR = 1e-12
LOG_SIGMA_FLOOR = math.log(SIGMA_FLOOR)


@dataclass(frozen=True)
class MdrnnConfig:
    latent_dim: int = 8
    n_actions: int = 3
    hidden: int = 64
    components: int = 5
    seq_len: int = 64
    epochs: int = 20
    batch: int = 16
    lr: float = 1e-3
    seed: int = 0

    @property
    def input_dim(self) -> int:
        return self.latent_dim + self.n_actions

    @property
    def head_width(self) -> int:
        return self.components * (1 + 2 * self.latent_dim)

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        h = self.hidden
        return {
            "lstm.Wx": (self.input_dim, 4 * h),
            "lstm.Wh": (h, 4 * h),
            "lstm.b": (4 * h,),
            "head.W": (h, self.head_width),
            "head.b": (self.head_width,),
        }


@dataclass
class MdrnnParams:
    config: MdrnnConfig
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


@dataclass
class MdrnnState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch: int | None = None) -> "MdrnnState":
        shape = (hidden,) if batch is None else (batch, hidden)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class MixtureParams:
    logits: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    @property
    def components(self) -> int:
        return self.logits.shape[-1]


@dataclass(frozen=True)
class SamplerConfig:
    pi_temperature: float = 1.0
    sigma_temperature: float = 1.0

    def __post_init__(self):
        if not self.pi_temperature > 0 or not self.sigma_temperature > 0:
            raise ParameterError(
                f"temperatures must be positive, got pi={self.pi_temperature}, sigma={self.sigma_temperature}"
            )


def init_mdrnn(config: MdrnnConfig, rng: Rng | None = None) -> MdrnnParams:
    rng = rng or Rng(config.seed)
    arrays = {}
    for name, shape in config.layer_shapes().items():
        if len(shape) == 2:
            arrays[name] = rng.standard_normals(shape[0] * shape[1]).reshape(shape) / math.sqrt(shape[0])
        else:
            arrays[name] = np.zeros(shape)
    return MdrnnParams(config, arrays)


def zero_mdrnn(config: MdrnnConfig) -> MdrnnParams:
    return MdrnnParams(config, {k: np.zeros(s) for k, s in config.layer_shapes().items()})


def one_hot(actions, n: int = 3) -> np.ndarray:
    a = np.asarray(actions, dtype=np.int64)
    out = np.zeros((*a.shape, n))
    np.put_along_axis(out, a[..., None], 1.0, axis=-1)
    return out


def rnn_input(z, action, n_actions: int = 3) -> np.ndarray:
    return np.concatenate([np.asarray(z, dtype=np.float64), one_hot(action, n_actions)], axis=-1)


# ------------------------------------------------------------------ inference


def lstm_step(x, state: MdrnnState, params: MdrnnParams) -> MdrnnState:
    a = params.arrays
    gates = np.asarray(x, dtype=np.float64) @ a["lstm.Wx"] + state.h @ a["lstm.Wh"] + a["lstm.b"]
    H = params.config.hidden
    i = F.sigmoid(gates[..., :H])
    f = F.sigmoid(gates[..., H:2 * H])
    g = np.tanh(gates[..., 2 * H:3 * H])
    o = F.sigmoid(gates[..., 3 * H:])
    c = f * state.c + i * g
    return MdrnnState(o * np.tanh(c), c)


def split_head(out, components: int, latent_dim: int):
    K, D = components, latent_dim
    logits = out[..., :K]
    mu = out[..., K:K + K * D]
    raw = out[..., K + K * D:]
    lead = out.shape[:-1]
    return logits, mu.reshape(*lead, K, D), raw.reshape(*lead, K, D)


def mdn_head(h, params: MdrnnParams) -> MixtureParams:
    out = np.asarray(h, dtype=np.float64) @ params.arrays["head.W"] + params.arrays["head.b"]
    logits, mu, raw = split_head(out, params.config.components, params.config.latent_dim)
    return MixtureParams(logits, mu, np.exp(raw))


def mdn_nll(mix: MixtureParams, target) -> float:
    """Negative log density of ``target`` under a diagonal Gaussian mixture."""
    t = np.asarray(target, dtype=np.float64)
    log_sigma = np.log(np.maximum(mix.sigma, SIGMA_FLOOR))
    zsc = (t - mix.mu) / np.exp(log_sigma)
    comp = np.sum(-0.5 * zsc * zsc - log_sigma - HALF_LOG_2PI, axis=-1)
    logits = np.asarray(mix.logits, dtype=np.float64)
    log_pi = logits - F.logsumexp(logits)
    return -F.logsumexp(log_pi + comp)


def sample_component(mix: MixtureParams, cfg: SamplerConfig, rng: Rng) -> int:
    weights = F.softmax(mix.logits, cfg.pi_temperature)
    u = rng.uniform()
    k = int(np.searchsorted(np.cumsum(weights), u, side="right"))
    return min(k, len(weights) - 1)


def sample_gaussian(mix: MixtureParams, k: int, cfg: SamplerConfig, rng: Rng) -> np.ndarray:
    """Draw from component ``k`` with its variance scaled by ``sigma_temperature``."""
    eps = rng.standard_normals(mix.mu.shape[-1])
    return mix.mu[k] + mix.sigma[k] * math.sqrt(cfg.sigma_temperature) * eps


def sample_mixture(mix: MixtureParams, cfg: SamplerConfig, rng: Rng) -> tuple[int, np.ndarray]:
    k = sample_component(mix, cfg, rng)
    return k, sample_gaussian(mix, k, cfg, rng)


# ------------------------------------------------------------- tape versions


def lstm_step_tensor(x, h, c, tensors, hidden: int):
    gates = x @ tensors["lstm.Wx"] + h @ tensors["lstm.Wh"] + tensors["lstm.b"]
    return _gates_to_state(gates, c, hidden)


def _gates_to_state(gates, c, H: int):
    i = T.sigmoid(gates[:, :H])
    f = T.sigmoid(gates[:, H:2 * H])
    g = T.tanh(gates[:, 2 * H:3 * H])
    o = T.sigmoid(gates[:, 3 * H:])
    c = f * c + i * g
    return o * T.tanh(c), c


def nll_tensor(out, target: np.ndarray, components: int, latent_dim: int):
    """Per-row NLL for head outputs ``out`` of shape ``(N, K(1+2D))``."""
    K, D = components, latent_dim
    n = out.shape[0]
    logits = out[:, :K]
    mu = out[:, K:K + K * D].reshape(n, K, D)
    log_sigma = T.clip_min(out[:, K + K * D:].reshape(n, K, D), LOG_SIGMA_FLOOR)
    zsc = (target[:, None, :] - mu) * T.exp(-log_sigma)
    comp = (zsc * zsc * -0.5 - log_sigma).sum(axis=-1) - HALF_LOG_2PI * D
    return -T.logsumexp(T.log_softmax(logits) + comp, axis=-1)


def sequence_loss(tensors, inputs: np.ndarray, targets: np.ndarray, mask: np.ndarray,
                  h0: np.ndarray, c0: np.ndarray, config: MdrnnConfig):
    """Masked mean NLL over a ``(steps, batch)`` window; also returns final ``(h, c)``."""
    steps, batch, _ = inputs.shape
    H = config.hidden
    xw = T.Tensor(inputs.reshape(steps * batch, -1)) @ tensors["lstm.Wx"] + tensors["lstm.b"]
    h, c = T.Tensor(h0), T.Tensor(c0)
    hs = []
    for t in range(steps):
        gates = xw[t * batch:(t + 1) * batch] + h @ tensors["lstm.Wh"]
        h, c = _gates_to_state(gates, c, H)
        hs.append(h)
    out = T.concat(hs, axis=0) @ tensors["head.W"] + tensors["head.b"]
    nll = nll_tensor(out, targets.reshape(steps * batch, -1), config.components, config.latent_dim)
    m = mask.reshape(-1).astype(np.float64)
    loss = (nll * m).sum() * (1.0 / max(m.sum(), 1.0))
    return loss, h, c


# ------------------------------------------------------------------ training


def _batch_window(data: LatentDataset, episodes, start: int, stop: int, n_actions: int):
    steps = stop - start
    D = data.latent_dim
    b = len(episodes)
    inputs = np.zeros((steps, b, D + n_actions))
    targets = np.zeros((steps, b, D))
    mask = np.zeros((steps, b), dtype=bool)
    for j, ep in enumerate(episodes):
        s = int(data.starts[ep])
        n_trans = int(data.lengths[ep]) - 1
        hi = min(stop, n_trans)
        if hi <= start:
            continue
        idx = np.arange(start, hi)
        inputs[: hi - start, j] = rnn_input(data.latents[s + idx], data.actions[s + idx], n_actions)
        targets[: hi - start, j] = data.latents[s + idx + 1]
        mask[: hi - start, j] = True
    return inputs, targets, mask


def train_mdrnn(data: LatentDataset, config: MdrnnConfig = MdrnnConfig(),
                params: MdrnnParams | None = None, progress=None) -> tuple[MdrnnParams, list[float]]:
    """Truncated-BPTT Adam training; returns the parameters and per-epoch mean NLL.

    Episodes are processed ``batch`` at a time; each is cut into windows of
    ``seq_len`` transitions, and the LSTM state is carried (without
    gradient) from one window to the next within an episode.
    """
    if data.latent_dim != config.latent_dim:
        raise ParameterError(f"dataset latent size {data.latent_dim} != config latent_dim {config.latent_dim}")
    usable = [i for i in range(data.n_episodes) if data.lengths[i] >= 2]
    if not usable:
        raise ParameterError("train_mdrnn needs at least one episode of length >= 2")
    rng = Rng(config.seed)
    params = params or init_mdrnn(config, Rng(rng.next_u64()))
    opt = Adam(params.arrays, lr=config.lr)
    curve = []
    step = 0
    for epoch in range(config.epochs):
        order = [usable[i] for i in rng.permutation(len(usable))]
        total, count = 0.0, 0
        for b0 in range(0, len(order), config.batch):
            eps = order[b0:b0 + config.batch]
            longest = max(int(data.lengths[e]) - 1 for e in eps)
            h = np.zeros((len(eps), config.hidden))
            c = np.zeros_like(h)
            for start in range(0, longest, config.seq_len):
                stop = min(start + config.seq_len, longest)
                inputs, targets, mask = _batch_window(data, eps, start, stop, config.n_actions)
                tape = Tape()
                tensors = {k: tape.param(k, v) for k, v in params.arrays.items()}
                loss, h_t, c_t = sequence_loss(tensors, inputs, targets, mask, h, c, config)
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingAborted(step, epoch, value)
                opt.step(backward(tape, loss))
                h, c = h_t.data.copy(), c_t.data.copy()
                n = int(mask.sum())
                total += value * n
                count += n
                step += 1
        curve.append(total / count)
        log.info("mdrnn epoch %d nll %.4f", epoch, curve[-1])
        if progress:
            progress(epoch, curve[-1])
    return params, curve


def evaluate_nll(params: MdrnnParams, data: LatentDataset) -> float:
    """Mean per-transition NLL with the state carried over each whole episode."""
    cfg = params.config
    total, count = 0.0, 0
    for ep in range(data.n_episodes):
        sl = data.episode(ep)
        z = data.latents[sl]
        a = data.actions[sl]
        state = MdrnnState.zeros(cfg.hidden)
        for t in range(len(z) - 1):
            state = lstm_step(rnn_input(z[t], a[t], cfg.n_actions), state, params)
            total += mdn_nll(mdn_head(state.h, params), z[t + 1])
            count += 1
    return total / max(count, 1)


def gaussian_baseline_nll(train: LatentDataset, test: LatentDataset) -> float:
    """Mean NLL of next-step latents under one diagonal Gaussian fit to ``train``."""
    mu = train.latents.mean(axis=0)
    sd = np.maximum(train.latents.std(axis=0), SIGMA_FLOOR)
    targets = np.concatenate([test.latents[test.episode(i)][1:] for i in range(test.n_episodes)])
    zsc = (targets - mu) / sd
    per = np.sum(0.5 * zsc * zsc + np.log(sd) + HALF_LOG_2PI, axis=-1)
    return float(per.mean())
