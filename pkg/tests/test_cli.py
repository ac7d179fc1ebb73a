import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import make_trace, separable_traces
from mdnlab import formats
from mdnlab.cli import main

MICRO = """\
env.episodes = 3
env.max_steps = 40
vae.epochs = 1
vae.encoder_hidden = 16
vae.decoder_hidden = 16
mdrnn.hidden = 8
mdrnn.epochs = 1
dream.steps = 12
dream.dreams_per_model = 2
dream.committed_dreams = 1
"""


@pytest.fixture
def micro(tmp_path, monkeypatch):
    monkeypatch.delenv("MDNLAB_SEED", raising=False)
    monkeypatch.delenv("MDNLAB_OUT", raising=False)
    cfg = tmp_path / "micro.cfg"
    cfg.write_text(MICRO)
    return tmp_path, cfg


def _tree(folder):
    return {p.relative_to(folder).as_posix(): p.read_bytes() for p in sorted(folder.rglob("*")) if p.is_file()}


def test_collect_counts_and_determinism(micro, capsys):
    tmp, cfg = micro
    for out in ("a", "b"):
        assert main(["collect", "--config", str(cfg), "--episodes", "2", "--steps", "50", "--out", str(tmp / out)]) == 0
    meta = json.loads((tmp / "a" / "dataset.json").read_text())["meta"]
    assert meta["frame_count"] <= 100
    assert _tree(tmp / "a") == _tree(tmp / "b")
    assert "explosion_active" in capsys.readouterr().out


def test_default_collection_has_explosions(tmp_path):
    assert main(["collect", "--out", str(tmp_path)]) == 0
    ds = formats.load_dataset(tmp_path)
    assert sum(e.explosion_active for e in ds.events) >= 1


def test_stage_by_stage(micro):
    tmp, cfg = micro
    c = ["--config", str(cfg)]
    assert main(["collect", *c, "--out", str(tmp / "data")]) == 0
    frames = formats.load_dataset(tmp / "data").frames
    assert main(["train-vae", *c, "--data", str(tmp / "data"), "--out", str(tmp / "vae")]) == 0
    assert (tmp / "vae" / "vae.json").exists()
    assert (tmp / "vae" / "vae_loss.csv").read_text().splitlines()[0] == "epoch,loss"
    assert len((tmp / "vae" / "vae_loss.csv").read_text().splitlines()) == 2
    assert main(["encode", *c, "--data", str(tmp / "data"), "--vae", str(tmp / "vae"), "--out", str(tmp / "lat")]) == 0
    assert len(formats.load_latents(tmp / "lat")) == len(frames)
    assert main(["train-rnn", *c, "--data", str(tmp / "lat"), "--vae", str(tmp / "vae"),
                 "--out", str(tmp / "m0")]) == 0
    assert main(["dream", *c, "--models", str(tmp / "m0"), "--dreams", "1", "--steps", "10",
                 "--out", str(tmp / "d")]) == 0
    traces = formats.list_traces(tmp / "d")
    assert len(traces) == 1 and len(formats.load_trace(traces[0])) == 10
    assert main(["dream", *c, "--models", str(tmp / "m0"), "--commit", "0", "--out", str(tmp / "c")]) == 0
    tr = formats.load_trace(formats.list_traces(tmp / "c")[0])
    assert tr.committed == 0 and np.all(tr.sampled == 0)
    assert main(["analyze", "--traces", str(tmp / "d"), str(tmp / "c"), "--out", str(tmp / "r.json"),
                 "--plots", str(tmp / "plots")]) == 0
    assert len(list((tmp / "plots").glob("weights_*.svg"))) == 2
    doc = json.loads((tmp / "r.json").read_text())
    assert len(doc["rows"]) == 5 and doc["committed"]["min_usage"] == {"0": 1.0}


def test_pipeline_reruns_are_byte_identical(micro):
    tmp, cfg = micro
    for out in ("r1", "r2"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp / out)]) == 0
    assert _tree(tmp / "r1") == _tree(tmp / "r2")


def test_analyze_degenerate_and_separable(tmp_path):
    formats.save_trace(tmp_path / "deg", make_trace([3] * 20, [True] * 5 + [False] * 15))
    for tr in separable_traces():
        formats.save_trace(tmp_path / "sep", tr)
    assert main(["analyze", "--traces", str(tmp_path / "deg"), "--out", str(tmp_path / "deg.json")]) == 0
    assert json.loads((tmp_path / "deg.json").read_text())["rows"][2]["p"] == 1.0
    assert main(["analyze", "--traces", str(tmp_path / "sep"), "--out", str(tmp_path / "sep.json")]) == 0
    assert any(r["p"] is not None and r["p"] < 0.001 for r in json.loads((tmp_path / "sep.json").read_text())["rows"])


def test_corrupt_trace_exit_code_names_file(tmp_path, capsys):
    path = formats.save_trace(tmp_path, make_trace([1] * 8, [True] * 8))
    blob = path.with_suffix(".bin")
    blob.write_bytes(blob.read_bytes()[:-3])
    assert main(["analyze", "--traces", str(tmp_path), "--out", str(tmp_path / "r.json")]) == 2
    err = capsys.readouterr().err
    assert str(blob) in err and "offset" in err


def test_usage_errors(micro):
    tmp, cfg = micro
    assert main([]) == 1
    assert main(["collect", "--episodes", "zero"]) == 1
    assert main(["collect", "--config", str(cfg), "--episodes", "-3"]) == 1
    bad = tmp / "bad.cfg"
    bad.write_text("mdrnn.components = 0\n")
    assert main(["collect", "--config", str(bad), "--out", str(tmp / "x")]) == 1


def test_commit_out_of_range(micro, tmp_path):
    from mdnlab.dreamer import Model
    from mdnlab.mdrnn import MdrnnConfig, init_mdrnn
    from mdnlab.vae import VaeConfig, init_vae

    formats.save_model(tmp_path / "m", init_vae(VaeConfig(latent_dim=2, encoder_hidden=(4,), decoder_hidden=(4,))),
                       init_mdrnn(MdrnnConfig(latent_dim=2, hidden=4, components=3)))
    assert main(["dream", "--models", str(tmp_path / "m"), "--commit", "3", "--out", str(tmp_path / "d")]) == 1


def test_io_errors(tmp_path):
    assert main(["train-vae", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "v")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["collect", "--episodes", "1", "--steps", "5", "--out", str(blocker / "sub")]) == 2


def test_numerical_abort(micro, monkeypatch):
    from mdnlab import pipeline
    from mdnlab.errors import TrainingAborted

    def explode(*a, **k):
        raise TrainingAborted(3, 0, float("nan"))

    tmp, cfg = micro
    assert main(["collect", "--config", str(cfg), "--out", str(tmp / "data")]) == 0
    monkeypatch.setattr(pipeline, "train_vae", explode)
    assert main(["train-vae", "--config", str(cfg), "--data", str(tmp / "data"), "--out", str(tmp / "v")]) == 3


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "mdnlab.cli", "show-config"], capture_output=True, text=True)
    assert out.returncode == 0 and "mdrnn.components = 5" in out.stdout


def test_five_models_ten_dreams_each(tmp_path):
    from mdnlab.mdrnn import MdrnnConfig, init_mdrnn
    from mdnlab.numcore import Rng
    from mdnlab.vae import VaeConfig, init_vae

    models = []
    for i in range(5):
        formats.save_model(tmp_path / f"m{i}", init_vae(VaeConfig(latent_dim=2, encoder_hidden=(4,), decoder_hidden=(4,))),
                           init_mdrnn(MdrnnConfig(latent_dim=2, hidden=4, components=3), Rng(i)))
        models.append(str(tmp_path / f"m{i}"))
    assert main(["dream", "--models", *models, "--dreams", "10", "--steps", "1000", "--no-frames",
                 "--out", str(tmp_path / "d")]) == 0
    paths = formats.list_traces(tmp_path / "d")
    assert len(paths) == 50
    assert all(len(formats.load_trace(p)) == 1000 for p in paths[:3])
