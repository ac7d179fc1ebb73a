import numpy as np
import pytest

from mdnlab.dreamer import Model, committed_batch, dream, dream_batch
from mdnlab.errors import ParameterError
from mdnlab.mdrnn import MdrnnConfig, SamplerConfig, init_mdrnn, lstm_step, mdn_head, rnn_input, MdrnnState
from mdnlab.numcore import Rng
from mdnlab.numcore.functional import softmax
from mdnlab.vae import VaeConfig, init_vae

VAE = init_vae(VaeConfig(latent_dim=3, encoder_hidden=(16,), decoder_hidden=(16,)), Rng(1))
RNN = init_mdrnn(MdrnnConfig(latent_dim=3, hidden=8, components=4), Rng(2))
MODEL = Model("toy", VAE, RNN)
Z0 = np.array([0.1, -0.2, 0.3])


def test_single_step():
    tr = dream(VAE, RNN, Z0, 1)
    assert len(tr) == 1 and tr.pi.shape == (1, 4) and tr.frames.shape == (1, 32, 32) and len(tr.events) == 1


def test_committed_component_used_everywhere():
    tr = dream(VAE, RNN, Z0, 100, committed=2)
    assert np.all(tr.sampled == 2) and tr.committed == 2 and tr.mode == "committed"


def test_dream_deterministic():
    a, b = dream(VAE, RNN, Z0, 30, seed=4), dream(VAE, RNN, Z0, 30, seed=4)
    for f in ("z", "pi", "sampled", "actions", "frames"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert a.events == b.events


def test_lengths_agree():
    tr = dream(VAE, RNN, Z0, 25)
    assert len(tr.z) == len(tr.pi) == len(tr.sampled) == len(tr.events) == len(tr.frames) == 25


def test_recorded_weights_match_replayed_mixture():
    cfg = SamplerConfig(pi_temperature=0.7, sigma_temperature=0.5)
    tr = dream(VAE, RNN, Z0, 40, cfg, seed=8)
    state, z = MdrnnState.zeros(8), Z0
    for t in range(40):
        state = lstm_step(rnn_input(z, tr.actions[t]), state, RNN)
        np.testing.assert_array_equal(tr.pi[t], softmax(mdn_head(state.h, RNN).logits, 0.7))
        z = tr.z[t]


def test_sampling_tracks_weights():
    tr = dream(VAE, RNN, Z0, 3000, seed=3, keep_frames=False)
    hit = np.mean(tr.sampled == tr.argmax)
    mean_max = tr.pi.max(1).mean()
    # per-step hits are Bernoulli(max weight), so the hit rate averages the max weights
    assert hit >= mean_max - 3 * np.sqrt(mean_max * (1 - mean_max) / 3000)


def test_invalid_arguments():
    with pytest.raises(ParameterError):
        dream(VAE, RNN, Z0, 0)
    with pytest.raises(ParameterError):
        dream(VAE, RNN, Z0, 5, committed=4)


def test_batch_sizes_and_distinct_seeds():
    traces = dream_batch([MODEL, Model("toy2", VAE, RNN)], 3, 20)
    assert len(traces) == 6 and all(len(t) == 20 for t in traces)
    pis = [t.pi.tobytes() for t in traces]
    assert len(set(pis)) == len(pis)
    assert len(dream_batch([MODEL], 1, 5)) == 1


def test_committed_batch_shares_start_frames():
    traces = committed_batch(MODEL, 2, 10, components=[0, 3])
    assert [t.committed for t in traces] == [0, 0, 3, 3]
    assert [t.dream_index for t in traces] == [0, 1, 0, 1]
    first = [t for t in traces if t.dream_index == 0]
    # same start latent: identical first-step weights across components
    np.testing.assert_array_equal(first[0].pi[0], first[1].pi[0])
