"""The pipeline stages: collect, train-vae, encode, train-rnn, dream and analyze.

Each stage reads the previous stage's files and writes its own, so stages
can run as separate commands or back to back through :func:`run_all`.
"""
from __future__ import annotations

import json
import logging
import math
import shutil
from pathlib import Path

import numpy as np

from . import formats, plots
from .analysis import (FLAG_NAMES, AttributionReport, agreement_rates, build_report, committed_summary)
from .config import COLLECT_KEY, COMMIT_KEY, DREAM_KEY, Config, dump
from .dataset import Dataset
from .dreamer import committed_batch, dream_batch
from .errors import LoadError, ParameterError
from .mdrnn import evaluate_nll, gaussian_baseline_nll, train_mdrnn
from .minicover import collect_episodes, dequantize
from .numcore import derive_seed
from .vae import train_vae

log = logging.getLogger(__name__)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _write_curve(path: Path, curve: list[float]) -> None:
    path.write_text("epoch,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(curve)))


def collect(cfg: Config, out) -> dict:
    """Simulate ``env.episodes`` random-policy episodes; returns a summary."""
    out = Path(out)
    eps = collect_episodes(cfg.env.episodes, cfg.env.max_steps, derive_seed(cfg.seed, COLLECT_KEY), cfg.env.env())
    ds = Dataset.from_episodes(eps)
    stored = [dequantize(ep.frames) for ep in eps]
    agree = agreement_rates(stored, [ep.events for ep in eps], cfg.analysis)
    rates = {name: float(np.mean([getattr(e, name) for e in ds.events])) for name in FLAG_NAMES}
    summary = {"frames": len(ds), "episodes": ds.n_episodes, "base_rates": rates, "detector_agreement": agree}
    formats.save_dataset(out, ds, {"summary": summary})
    (out / "config.txt").write_text(dump(cfg))
    return summary


def train_vae_stage(cfg: Config, data, out) -> list[float]:
    out = Path(out)
    ds = formats.load_dataset(data)
    if ds.frames.shape[1:] != (32, 32):
        raise ParameterError(f"dataset frames are {ds.frames.shape[1:]}, the VAE expects (32, 32)")
    params, curve = train_vae(ds, cfg.vae_config())
    formats.save_checkpoint(out, params, "vae")
    _write_curve(out / "vae_loss.csv", curve)
    return curve


def encode_stage(data, vae_dir, out) -> int:
    from .vae import encode_dataset

    ds = formats.load_dataset(data)
    vae = formats.load_checkpoint(vae_dir, "vae")
    lat = encode_dataset(ds, vae)
    formats.save_latents(out, lat)
    return len(lat)


def split_holdout(n_episodes: int, fraction: float) -> tuple[list[int], list[int]]:
    """Last ``ceil(fraction * n)`` episodes are held out, keeping at least one for training."""
    held = min(math.ceil(fraction * n_episodes), n_episodes - 1) if fraction > 0 else 0
    return list(range(n_episodes - held)), list(range(n_episodes - held, n_episodes))


def train_rnn_stage(cfg: Config, latents, out, replica: int = 0, vae_dir=None) -> dict:
    """Train one MD-RNN; with ``vae_dir`` the VAE checkpoint is copied in so ``out`` is a full model."""
    out = Path(out)
    lat = formats.load_latents(latents)
    train_idx, held_idx = split_holdout(lat.n_episodes, cfg.mdrnn.holdout)
    train = lat.subset(train_idx)
    params, curve = train_mdrnn(train, cfg.mdrnn_config(replica))
    out.mkdir(parents=True, exist_ok=True)
    formats.save_checkpoint(out, params, "mdrnn")
    _write_curve(out / "mdrnn_loss.csv", curve)
    metrics = {"train_episodes": len(train_idx), "heldout_episodes": len(held_idx), "final_train_nll": curve[-1]}
    if held_idx:
        held = lat.subset(held_idx)
        metrics["heldout_nll"] = evaluate_nll(params, held)
        metrics["baseline_nll"] = gaussian_baseline_nll(train, held)
    _write_json(out / "metrics.json", metrics)
    if vae_dir is not None:
        for name in ("vae.json", "vae.f64"):
            shutil.copyfile(Path(vae_dir) / name, out / name)
        formats.load_model(out)
    return metrics


def _unique_ids(model_dirs) -> list[Path]:
    dirs = [Path(m) for m in model_dirs]
    names = [d.name for d in dirs]
    if len(set(names)) != len(names):
        raise ParameterError(f"model folders must have distinct names, got {names}")
    return dirs


def dream_stage(cfg: Config, model_dirs, out, dreams: int | None = None, steps: int | None = None,
                commit=None, keep_frames: bool = True) -> list[Path]:
    """Free dreams (``commit=None``) or committed dreams (``commit`` = component index or ``"all"``)."""
    out = Path(out)
    dirs = _unique_ids(model_dirs)
    steps = cfg.dream.steps if steps is None else steps
    sampler = cfg.sampler()
    paths = []
    if commit is None:
        n = cfg.dream.dreams_per_model if dreams is None else dreams
        traces = dream_batch(dirs, n, steps, sampler, derive_seed(cfg.seed, DREAM_KEY), cfg.env.env(),
                             keep_frames=keep_frames, thresholds=cfg.analysis)
        paths = [formats.save_trace(out, tr, keep_frames) for tr in traces]
    else:
        n = cfg.dream.committed_dreams if dreams is None else dreams
        for mi, d in enumerate(dirs):
            model = formats.load_model(d)
            K = model.mdrnn.config.components
            comps = range(K) if commit == "all" else [int(commit)]
            for k in comps:
                if not 0 <= k < K:
                    raise ParameterError(f"--commit {k} is out of range: the model has K={K} components")
            traces = committed_batch(model, n, steps, sampler, derive_seed(cfg.seed, COMMIT_KEY, mi), comps,
                                     cfg.env.env(), keep_frames=keep_frames, thresholds=cfg.analysis)
            paths += [formats.save_trace(out, tr, keep_frames) for tr in traces]
    return paths


def analyze_stage(trace_dirs, report_path, plots_dir=None, render: bool = True) -> AttributionReport:
    for d in trace_dirs:
        if not Path(d).is_dir():
            raise LoadError(f"trace folder not found: {d}")
    paths = sorted({p for d in trace_dirs for p in formats.list_traces(d)})
    if not paths:
        raise ParameterError(f"no trace files found in {', '.join(str(d) for d in trace_dirs)}")
    traces = [formats.load_trace(p) for p in paths]
    free = [t for t in traces if t.committed is None]
    if free:
        report = build_report(free)
    else:
        report = AttributionReport([], {"dreams": 0})
    if any(t.committed is not None for t in traces):
        report.committed = committed_summary(traces)
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.to_json())
    report_path.with_suffix(".csv").write_text(report.to_csv())
    if plots_dir is not None:
        if report.rows:
            plots.write_share_plots(plots_dir, report, render)
        for p, tr in zip(paths, traces):
            plots.write_weight_plot(plots_dir, p.stem.removeprefix("trace_"), tr.pi, render)
        if report.committed:
            counts = {int(k): v for k, v in report.committed["counts"].items()}
            plots.write_committed_plot(plots_dir, counts, render=render)
    return report


def run_all(cfg: Config, out, render: bool = True, progress=print) -> AttributionReport:
    """Every stage in order under ``out``: data, vae, latents, models/m*, dreams, committed, analysis."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump(cfg))
    summary = collect(cfg, out / "data")
    progress(f"collect: {summary['frames']} frames")
    curve = train_vae_stage(cfg, out / "data", out / "vae")
    progress(f"train-vae: final loss {curve[-1]:.4f}")
    encode_stage(out / "data", out / "vae", out / "latents")
    models = []
    for i in range(cfg.mdrnn.models):
        m = out / "models" / f"m{i}"
        metrics = train_rnn_stage(cfg, out / "latents", m, replica=i, vae_dir=out / "vae")
        progress(f"train-rnn m{i}: " + ", ".join(f"{k} {v:.4f}" for k, v in sorted(metrics.items())
                                                  if isinstance(v, float)))
        models.append(m)
    dream_stage(cfg, models, out / "dreams", keep_frames=False)
    trace_dirs = [out / "dreams"]
    if cfg.dream.committed_dreams > 0:
        dream_stage(cfg, models[:1], out / "committed", commit="all", keep_frames=False)
        trace_dirs.append(out / "committed")
    report = analyze_stage(trace_dirs, out / "analysis" / "report.json",
                           out / "analysis" / "plots", render)
    progress(f"analyze: {out / 'analysis' / 'report.json'}")
    return report
