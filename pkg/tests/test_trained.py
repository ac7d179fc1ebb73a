"""Regression bounds measured on models from the default desk-scale run."""
import json
import math

import numpy as np
import pytest

from mdnlab import formats
from mdnlab.analysis import detect_events
from mdnlab.dataset import LatentDataset
from mdnlab.mdrnn import evaluate_nll
from mdnlab.minicover import WorldState, collect_episodes, render
from mdnlab.pipeline import split_holdout
from mdnlab.vae import decode, encode

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def vae(desk_run):
    return formats.load_checkpoint(desk_run[0] / "vae", "vae")


def test_vae_heldout_reconstruction(vae):
    frames = np.concatenate([e.float_frames() for e in collect_episodes(20, 300, 777)])
    mu, _ = encode(frames, vae)
    mse = float(np.mean((decode(mu, vae) - frames) ** 2))
    assert mse < 0.02


def test_player_position_moves_latent(vae):
    a, _ = encode(render(WorldState(player_col=10)), vae)
    b, _ = encode(render(WorldState(player_col=20)), vae)
    assert np.linalg.norm(a - b) > 1e-3


def test_wall_frames_survive_reconstruction(vae):
    frames, sides = [], []
    for col in (2, 3, 4, 27, 28, 29):
        for m in range(16):
            monsters = tuple(bool(m >> i & 1) for i in range(4))
            frames.append(render(WorldState(player_col=col, monsters=monsters)))
            sides.append("wall_left" if col <= 4 else "wall_right")
    mu, _ = encode(np.array(frames), vae)
    recon = decode(mu, vae)
    hits = [getattr(detect_events(f), side) for f, side in zip(recon, sides)]
    assert np.mean(hits) >= 0.9


def test_mdrnn_beats_global_gaussian(desk_run):
    out = desk_run[0]
    lat = formats.load_latents(out / "latents")
    _, held_idx = split_holdout(lat.n_episodes, 0.1)
    held = lat.subset(held_idx)
    mu, sd = lat.latents.mean(0), lat.latents.std(0)
    targets = np.concatenate([held.latents[held.episode(i)][1:] for i in range(held.n_episodes)])
    baseline = float(np.mean(np.sum(0.5 * ((targets - mu) / sd) ** 2 + np.log(sd) + 0.5 * math.log(2 * math.pi), 1)))
    for m in sorted((out / "models").iterdir()):
        model = formats.load_model(m)
        metrics = json.loads((m / "metrics.json").read_text())
        assert evaluate_nll(model.mdrnn, held) == metrics["heldout_nll"]
        assert metrics["heldout_nll"] < baseline
