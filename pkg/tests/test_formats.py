import json

import numpy as np
import pytest

from mdnlab import formats
from mdnlab.dataset import Dataset
from mdnlab.dreamer import dream
from mdnlab.errors import CorruptFileError, LoadError
from mdnlab.mdrnn import MdrnnConfig, init_mdrnn
from mdnlab.minicover import collect_episodes
from mdnlab.numcore import Rng
from mdnlab.vae import VaeConfig, encode_dataset, init_vae

VAE = init_vae(VaeConfig(latent_dim=3, encoder_hidden=(16,), decoder_hidden=(16,)), Rng(1))
RNN = init_mdrnn(MdrnnConfig(latent_dim=3, hidden=8, components=4), Rng(2))


@pytest.fixture
def dataset():
    return Dataset.from_episodes(collect_episodes(3, 40, 9))


def test_dataset_round_trip(tmp_path, dataset):
    formats.save_dataset(tmp_path, dataset)
    back = formats.load_dataset(tmp_path)
    np.testing.assert_array_equal(back.frames, dataset.frames)
    np.testing.assert_array_equal(back.actions, dataset.actions)
    assert back.events == dataset.events and back.seeds == dataset.seeds


def test_latents_round_trip(tmp_path, dataset):
    lat = encode_dataset(dataset, VAE)
    formats.save_latents(tmp_path, lat)
    back = formats.load_latents(tmp_path)
    np.testing.assert_array_equal(back.latents, lat.latents)
    np.testing.assert_array_equal(back.lengths, lat.lengths)


def test_checkpoint_round_trip(tmp_path):
    formats.save_model(tmp_path / "m", VAE, RNN)
    m = formats.load_model(tmp_path / "m")
    assert m.model_id == "m" and m.vae.config == VAE.config and m.mdrnn.config == RNN.config
    for k, v in RNN.arrays.items():
        np.testing.assert_array_equal(m.mdrnn.arrays[k], v)


def test_checkpoint_shape_mismatch_names_both_shapes(tmp_path):
    formats.save_checkpoint(tmp_path, RNN, "mdrnn")
    with pytest.raises(LoadError, match=r"\(6, 32\).*\(6, 64\)"):
        formats.load_checkpoint(tmp_path, "mdrnn", MdrnnConfig(latent_dim=3, hidden=16, components=4))


def test_trace_round_trip(tmp_path):
    tr = dream(VAE, RNN, np.zeros(3), 12, seed=3, committed=1)
    path = formats.save_trace(tmp_path, tr)
    back = formats.load_trace(path)
    for f in ("z", "pi", "argmax", "sampled", "actions", "frames"):
        np.testing.assert_array_equal(getattr(back, f), getattr(tr, f))
    assert back.events == tr.events and back.committed == 1
    assert json.loads(path.read_text())["meta"]["committed"] == 1


def test_same_content_same_bytes(tmp_path, dataset):
    formats.save_dataset(tmp_path / "a", dataset)
    formats.save_dataset(tmp_path / "b", dataset)
    for name in ("dataset.json", "frames.u8", "events.u8", "actions.u8"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_flipped_byte_reports_offset(tmp_path):
    tr = dream(VAE, RNN, np.zeros(3), 12, seed=3)
    path = formats.save_trace(tmp_path, tr)
    meta = json.loads(path.read_text())
    sec = next(s for s in meta["sections"] if s["name"] == "pi")
    blob = tmp_path / sec["file"]
    raw = bytearray(blob.read_bytes())
    raw[sec["offset"] + 5] ^= 0xFF
    blob.write_bytes(bytes(raw))
    with pytest.raises(CorruptFileError) as exc:
        formats.load_trace(path)
    assert exc.value.offset == sec["offset"] and str(blob) in str(exc.value)


def test_truncated_blob(tmp_path):
    tr = dream(VAE, RNN, np.zeros(3), 12, seed=3)
    path = formats.save_trace(tmp_path, tr)
    blob = path.with_suffix(".bin")
    blob.write_bytes(blob.read_bytes()[:100])
    with pytest.raises(CorruptFileError) as exc:
        formats.load_trace(path)
    assert exc.value.offset == 100


def test_weights_not_summing_to_one(tmp_path):
    # a consistent file (valid checksums) whose weights are off is still rejected, with the row's byte offset
    tr = dream(VAE, RNN, np.zeros(3), 12, seed=3)
    tr.pi = tr.pi.copy()
    tr.pi[4] *= 2
    path = formats.save_trace(tmp_path, tr)
    sec = next(s for s in json.loads(path.read_text())["sections"] if s["name"] == "pi")
    with pytest.raises(CorruptFileError) as exc:
        formats.load_trace(path)
    assert exc.value.offset == sec["offset"] + 4 * 4 * 8


def test_bad_manifest(tmp_path):
    (tmp_path / "dataset.json").write_text("{not json")
    with pytest.raises(CorruptFileError):
        formats.load_dataset(tmp_path)


def test_missing_file(tmp_path):
    with pytest.raises(LoadError):
        formats.load_dataset(tmp_path / "nothing")
