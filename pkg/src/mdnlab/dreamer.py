"""Closed-loop dreams: the MD-RNN's own samples are fed back as its input.

Every step draws a random action, records the mixture weights, picks a
component (sampled, or forced in committed mode), draws the next latent,
decodes it and runs the event detectors on the decoded frame.

Random draws per step, in order: the action, the component (free mode
only), then ``D`` Gaussian draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis.events import DEFAULT_THRESHOLDS, DetectorThresholds, EventFlags, detect_events
from .errors import ParameterError
from .mdrnn import (MdrnnParams, MdrnnState, SamplerConfig, lstm_step, mdn_head, rnn_input,
                    sample_component, sample_gaussian)
from .minicover import N_ACTIONS, EnvConfig, quantize, run_episode
from .numcore import Rng, derive_seed, softmax
from .vae import VaeParams, decode, encode

FREE = "free"
COMMITTED = "committed"


@dataclass
class Model:
    model_id: str
    vae: VaeParams
    mdrnn: MdrnnParams


@dataclass
class DreamTrace:
    model_id: str
    seed: int
    mode: str
    committed: int | None
    pi_temperature: float
    sigma_temperature: float
    z: np.ndarray
    pi: np.ndarray
    argmax: np.ndarray
    sampled: np.ndarray
    actions: np.ndarray
    events: list[EventFlags]
    frames: np.ndarray | None = None
    dream_index: int = 0
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pi)

    def flag(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.events], dtype=bool)


def dream(vae: VaeParams, mdrnn: MdrnnParams, z0, steps: int, cfg: SamplerConfig = SamplerConfig(),
          seed: int = 0, committed: int | None = None, model_id: str = "model",
          keep_frames: bool = True, thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> DreamTrace:
    """Hallucinate ``steps`` frames starting from the latent ``z0``.

    ``committed=k`` forces component ``k`` at every step; only the Gaussian
    draw stays random.
    """
    K = mdrnn.config.components
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if committed is not None and not 0 <= committed < K:
        raise ParameterError(f"committed component {committed} out of range for K={K}")
    rng = Rng(seed)
    D = mdrnn.config.latent_dim
    z = np.asarray(z0, dtype=np.float64).reshape(D)
    state = MdrnnState.zeros(mdrnn.config.hidden)
    zs = np.empty((steps, D))
    pis = np.empty((steps, K))
    sampled = np.empty(steps, dtype=np.int64)
    actions = np.empty(steps, dtype=np.int64)
    frames = np.empty((steps, *vae.config.frame_shape), dtype=np.uint8) if keep_frames else None
    events = []
    prev = None
    for t in range(steps):
        a = rng.integer(N_ACTIONS)
        state = lstm_step(rnn_input(z, a, mdrnn.config.n_actions), state, mdrnn)
        mix = mdn_head(state.h, mdrnn)
        pis[t] = softmax(mix.logits, cfg.pi_temperature)
        k = committed if committed is not None else sample_component(mix, cfg, rng)
        z = sample_gaussian(mix, k, cfg, rng)
        frame = decode(z, vae)
        events.append(detect_events(frame, prev, thresholds))
        prev = frame
        zs[t] = z
        sampled[t] = k
        actions[t] = a
        if frames is not None:
            frames[t] = quantize(frame)
    return DreamTrace(
        model_id=model_id,
        seed=seed,
        mode=FREE if committed is None else COMMITTED,
        committed=committed,
        pi_temperature=cfg.pi_temperature,
        sigma_temperature=cfg.sigma_temperature,
        z=zs,
        pi=pis,
        argmax=np.argmax(pis, axis=1),
        sampled=sampled,
        actions=actions,
        events=events,
        frames=frames,
    )


def initial_latent(vae: VaeParams, seed: int, env: EnvConfig = EnvConfig()) -> np.ndarray:
    """Encode a frame picked at random from a freshly simulated episode."""
    ep = run_episode(derive_seed(seed, 0), env)
    idx = Rng(derive_seed(seed, 1)).integer(len(ep))
    mu, _ = encode(ep.float_frames()[idx], vae)
    return mu


def _as_model(m) -> Model:
    if isinstance(m, Model):
        return m
    from .formats import load_model
    return load_model(m)


def dream_batch(models, dreams_per_model: int, steps: int, cfg: SamplerConfig = SamplerConfig(),
                seed: int = 0, env: EnvConfig = EnvConfig(), keep_frames: bool = False,
                thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> list[DreamTrace]:
    """Free-running dreams for each model; ``models`` are :class:`Model` objects or model folders."""
    traces = []
    for mi, m in enumerate(models):
        model = _as_model(m)
        for d in range(dreams_per_model):
            s = derive_seed(seed, mi, d)
            z0 = initial_latent(model.vae, derive_seed(s, 7), env)
            tr = dream(model.vae, model.mdrnn, z0, steps, cfg, seed=s, model_id=model.model_id,
                       keep_frames=keep_frames, thresholds=thresholds)
            tr.dream_index = d
            traces.append(tr)
    return traces


def committed_batch(model, dreams_per_component: int, steps: int, cfg: SamplerConfig = SamplerConfig(),
                    seed: int = 0, components=None, env: EnvConfig = EnvConfig(), keep_frames: bool = False,
                    thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> list[DreamTrace]:
    """Dreams committed to one component each, ``dreams_per_component`` per component."""
    model = _as_model(model)
    K = model.mdrnn.config.components
    comps = range(K) if components is None else components
    traces = []
    for k in comps:
        if not 0 <= k < K:
            raise ParameterError(f"committed component {k} out of range for K={K}")
        for d in range(dreams_per_component):
            s = derive_seed(seed, 1000 + k, d)
            # same start frames for every component
            z0 = initial_latent(model.vae, derive_seed(seed, 7, d), env)
            tr = dream(model.vae, model.mdrnn, z0, steps, cfg, seed=s, committed=k, model_id=model.model_id,
                       keep_frames=keep_frames, thresholds=thresholds)
            tr.dream_index = d
            traces.append(tr)
    return traces
