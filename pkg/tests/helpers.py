"""Random small problem instances shared by the gradient and oracle tests."""
import math

import numpy as np

from mdnlab.mdrnn import MdrnnConfig, MixtureParams, nll_tensor, sequence_loss
from mdnlab.vae import VaeConfig, loss_tensor


def mdn_instance(r: np.random.Generator):
    """MDN head outputs with overlapping components, so no gradient entry is negligible."""
    K = int(r.integers(1, 6))
    D = int(r.integers(1, 5))
    N = 2
    out = np.concatenate([
        r.normal(size=(N, K)),
        r.normal(scale=0.5, size=(N, K * D)),
        r.normal(0.3, 0.2, size=(N, K * D)),
    ], axis=1)
    target = r.normal(scale=0.5, size=(N, D))
    return {"out": out}, lambda t: nll_tensor(t["out"], target, K, D).sum()


def lstm_chain_instance(r: np.random.Generator, steps: int = 3):
    cfg = MdrnnConfig(latent_dim=2, hidden=3, components=2)
    params = {k: r.normal(scale=0.5, size=s) for k, s in cfg.layer_shapes().items()}
    inputs = r.normal(size=(steps, 1, cfg.input_dim))
    targets = r.normal(size=(steps, 1, cfg.latent_dim))
    h0 = r.normal(scale=0.1, size=(1, cfg.hidden))
    c0 = r.normal(scale=0.1, size=(1, cfg.hidden))
    mask = np.ones((steps, 1), dtype=bool)
    return params, lambda t: sequence_loss(t, inputs, targets, mask, h0, c0, cfg)[0]


def vae_instance(r: np.random.Generator, batch: int = 2):
    cfg = VaeConfig(latent_dim=2, frame_shape=(3, 3), encoder_hidden=(4, 3), decoder_hidden=(3, 4))
    params = {k: r.normal(scale=0.5, size=s) for k, s in cfg.layer_shapes().items()}
    frames = r.random((batch, cfg.pixels))
    eps = r.normal(size=(batch, cfg.latent_dim))
    return params, lambda t: loss_tensor(t, frames, eps, 1.0, cfg.latent_dim)


def random_mixture(r: np.random.Generator, K: int, D: int) -> MixtureParams:
    return MixtureParams(
        logits=r.normal(size=K),
        mu=r.normal(size=(K, D)),
        sigma=np.exp(r.normal(scale=0.5, size=(K, D))),
    )


def brute_force_nll(mix: MixtureParams, target) -> float:
    """Mixture density summed directly from per-component Gaussian pdfs."""
    w = np.exp(mix.logits) / np.sum(np.exp(mix.logits))
    density = 0.0
    for k in range(len(w)):
        comp = 1.0
        for d in range(mix.mu.shape[1]):
            s = mix.sigma[k, d]
            comp *= math.exp(-0.5 * ((target[d] - mix.mu[k, d]) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        density += w[k] * comp
    return -math.log(density)


def make_trace(argmax, event_mask, event="explosion_active", K=5, model_id="m", index=0, committed=None):
    """Trace whose weight argmax follows ``argmax`` and whose ``event`` flag follows ``event_mask``."""
    from mdnlab.analysis import EventFlags
    from mdnlab.dreamer import COMMITTED, FREE, DreamTrace

    argmax = np.asarray(argmax, dtype=np.int64)
    T = len(argmax)
    pi = np.full((T, K), 0.5 / (K - 1)) if K > 1 else np.ones((T, 1))
    if K > 1:
        pi[np.arange(T), argmax] = 0.5
    events = [EventFlags(**{event: bool(m)}) for m in event_mask]
    sampled = argmax if committed is None else np.full(T, committed)
    return DreamTrace(model_id=model_id, seed=index, mode=FREE if committed is None else COMMITTED,
                      committed=committed, pi_temperature=1.0, sigma_temperature=1.0, z=np.zeros((T, 2)), pi=pi,
                      argmax=argmax, sampled=sampled, actions=np.ones(T, dtype=np.int64), events=events,
                      dream_index=index)


def separable_traces(n=10, T=100, main=1, event_share=0.9, overall_share=0.2):
    """Dreams where the main component holds ``event_share`` of event frames and ``overall_share`` of all frames."""
    out = []
    for d in range(n):
        argmax = np.zeros(T, dtype=np.int64)
        mask = np.zeros(T, dtype=bool)
        mask[:10] = True
        n_main = int(round(overall_share * T))
        n_event_main = int(round(event_share * 10))
        argmax[:n_event_main] = main
        argmax[10:10 + n_main - n_event_main] = main
        argmax[n_event_main:10] = (main + 1) % 5
        out.append(make_trace(argmax, mask, index=d))
    return out
