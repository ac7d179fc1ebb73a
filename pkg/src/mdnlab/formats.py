"""Manifest + raw-blob file formats shared by every pipeline stage.

A bundle is a JSON manifest (sorted keys, so identical content gives
identical bytes) that lists named sections. Each section gives its blob
file, byte offset, byte length, numpy dtype (always little-endian), shape
and a CRC-32. Blobs hold raw array bytes in row-major order.

Bundle kinds:

``dataset``     frames (u1, ``round(pixel * 255)``), actions (u1), ground-truth
                event bits and counts; episode starts, lengths and seeds in the
                manifest.
``checkpoint``  float64 parameters in one blob; the model config and the
                ``kind`` (``vae`` / ``mdrnn``) in the manifest.
``latents``     float64 latent means plus actions and episode boundaries.
``trace``       one dream: z and pi (f8), components and actions (u1), event
                bits and counts, optional decoded frames (u1).
"""
from __future__ import annotations

import json
import zlib
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .analysis.events import EventFlags
from .dataset import Dataset, LatentDataset
from .errors import CorruptFileError, LoadError
from .mdrnn import MdrnnConfig, MdrnnParams
from .vae import VaeConfig, VaeParams

VERSION = 1


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def write_bundle(manifest_path, kind: str, meta: dict, sections: list[tuple[str, str, np.ndarray]]) -> Path:
    """Write ``sections`` (``(name, blob_filename, array)``) and their manifest."""
    manifest_path = Path(manifest_path)
    folder = manifest_path.parent
    folder.mkdir(parents=True, exist_ok=True)
    offsets: dict[str, int] = {}
    blobs: dict[str, list[bytes]] = {}
    entries = []
    for name, blob, arr in sections:
        arr = np.ascontiguousarray(arr)
        dt = arr.dtype.newbyteorder("<")
        raw = arr.astype(dt, copy=False).tobytes()
        off = offsets.get(blob, 0)
        entries.append({
            "name": name,
            "file": blob,
            "offset": off,
            "nbytes": len(raw),
            "dtype": dt.str,
            "shape": list(arr.shape),
            "crc32": zlib.crc32(raw),
        })
        blobs.setdefault(blob, []).append(raw)
        offsets[blob] = off + len(raw)
    for blob, parts in blobs.items():
        (folder / blob).write_bytes(b"".join(parts))
    doc = {"format": "mdnlab", "kind": kind, "version": VERSION, "meta": meta, "sections": entries}
    manifest_path.write_text(_dump_json(doc))
    return manifest_path


def read_bundle(manifest_path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise LoadError(f"missing file: {manifest_path}")
    text = manifest_path.read_bytes()
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        pos = getattr(exc, "pos", getattr(exc, "start", 0))
        raise CorruptFileError(manifest_path, pos, f"manifest is not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != "mdnlab":
        raise CorruptFileError(manifest_path, 0, "not an mdnlab manifest")
    if kind is not None and doc.get("kind") != kind:
        raise LoadError(f"{manifest_path}: expected a {kind} bundle, found {doc.get('kind')!r}")
    folder = manifest_path.parent
    cache: dict[str, bytes] = {}
    arrays = {}
    for sec in doc.get("sections", []):
        blob_path = folder / sec["file"]
        if sec["file"] not in cache:
            if not blob_path.exists():
                raise LoadError(f"missing file: {blob_path}")
            cache[sec["file"]] = blob_path.read_bytes()
        data = cache[sec["file"]]
        off, n = int(sec["offset"]), int(sec["nbytes"])
        if off + n > len(data):
            raise CorruptFileError(blob_path, len(data), f"section {sec['name']!r} truncated (needs bytes {off}..{off + n})")
        raw = data[off:off + n]
        if zlib.crc32(raw) != sec["crc32"]:
            raise CorruptFileError(blob_path, off, f"checksum mismatch in section {sec['name']!r}")
        dt = np.dtype(sec["dtype"])
        shape = tuple(sec["shape"])
        if int(np.prod(shape, dtype=np.int64)) * dt.itemsize != n:
            raise CorruptFileError(blob_path, off, f"section {sec['name']!r} size does not match shape {shape}")
        arrays[sec["name"]] = np.frombuffer(raw, dtype=dt).reshape(shape).astype(dt.newbyteorder("="))
    return doc["meta"], arrays


# ------------------------------------------------------------------ datasets


def _events_arrays(events: list[EventFlags]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    bits = np.array([e.bits() for e in events], dtype=np.uint8)
    fb = np.array([min(e.fireball_count, 255) for e in events], dtype=np.uint8)
    mon = np.array([min(e.monster_count, 255) for e in events], dtype=np.uint8)
    return bits, fb, mon


def _events_from(bits, fb, mon) -> list[EventFlags]:
    return [EventFlags.from_bits(int(b), int(f), int(m)) for b, f, m in zip(bits, fb, mon)]


def save_dataset(folder, ds: Dataset, extra: dict | None = None) -> Path:
    bits, fb, mon = _events_arrays(ds.events)
    meta = {
        "frame_count": len(ds),
        "height": int(ds.frames.shape[1]),
        "width": int(ds.frames.shape[2]),
        "episode_starts": [int(s) for s in ds.starts],
        "episode_lengths": [int(n) for n in ds.lengths],
        "seeds": [int(s) for s in ds.seeds],
        **(extra or {}),
    }
    return write_bundle(Path(folder) / "dataset.json", "dataset", meta, [
        ("frames", "frames.u8", ds.frames.astype(np.uint8)),
        ("actions", "actions.u8", ds.actions.astype(np.uint8)),
        ("event_bits", "events.u8", bits),
        ("fireball_count", "events.u8", fb),
        ("monster_count", "events.u8", mon),
    ])


def load_dataset(folder) -> Dataset:
    path = Path(folder) / "dataset.json"
    meta, arr = read_bundle(path, "dataset")
    frames = arr["frames"]
    if frames.shape != (meta["frame_count"], meta["height"], meta["width"]):
        raise CorruptFileError(path, 0, f"frames shape {frames.shape} disagrees with manifest")
    return Dataset(
        frames=frames,
        actions=arr["actions"],
        starts=np.array(meta["episode_starts"], dtype=np.int64),
        lengths=np.array(meta["episode_lengths"], dtype=np.int64),
        seeds=list(meta["seeds"]),
        events=_events_from(arr["event_bits"], arr["fireball_count"], arr["monster_count"]),
    )


def save_latents(folder, lat: LatentDataset) -> Path:
    meta = {
        "frame_count": len(lat),
        "latent_dim": lat.latent_dim,
        "episode_starts": [int(s) for s in lat.starts],
        "episode_lengths": [int(n) for n in lat.lengths],
        "seeds": [int(s) for s in lat.seeds],
    }
    return write_bundle(Path(folder) / "latents.json", "latents", meta, [
        ("latents", "latents.f64", lat.latents.astype("<f8")),
        ("actions", "actions.u8", lat.actions.astype(np.uint8)),
    ])


def load_latents(folder) -> LatentDataset:
    meta, arr = read_bundle(Path(folder) / "latents.json", "latents")
    return LatentDataset(
        latents=arr["latents"],
        actions=arr["actions"],
        starts=np.array(meta["episode_starts"], dtype=np.int64),
        lengths=np.array(meta["episode_lengths"], dtype=np.int64),
        seeds=list(meta["seeds"]),
    )


# --------------------------------------------------------------- checkpoints

_KINDS = {"vae": (VaeConfig, VaeParams), "mdrnn": (MdrnnConfig, MdrnnParams)}


def _config_to_json(cfg) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()}


def _config_from_json(cls, d: dict):
    fields = cls.__dataclass_fields__
    kw = {}
    for k, v in d.items():
        if k in fields:
            kw[k] = tuple(v) if isinstance(v, list) else v
    return cls(**kw)


def save_checkpoint(folder, params, kind: str) -> Path:
    if kind not in _KINDS:
        raise ValueError(f"unknown checkpoint kind {kind!r}")
    names = list(params.config.layer_shapes())
    meta = {"model": kind, "config": _config_to_json(params.config), "parameters": names}
    return write_bundle(Path(folder) / f"{kind}.json", "checkpoint", meta,
                        [(n, f"{kind}.f64", params.arrays[n].astype("<f8")) for n in names])


def load_checkpoint(folder, kind: str, expect=None):
    """Load ``folder/<kind>.json``; ``expect`` is an optional config whose shapes must match."""
    path = Path(folder) / f"{kind}.json"
    meta, arr = read_bundle(path, "checkpoint")
    if meta.get("model") != kind:
        raise LoadError(f"{path}: checkpoint holds a {meta.get('model')!r} model, expected {kind!r}")
    cfg_cls, params_cls = _KINDS[kind]
    cfg = _config_from_json(cfg_cls, meta["config"])
    for name, shape in cfg.layer_shapes().items():
        if name not in arr:
            raise LoadError(f"{path}: parameter {name!r} missing")
        if tuple(arr[name].shape) != tuple(shape):
            raise LoadError(f"{path}: parameter {name!r} has shape {tuple(arr[name].shape)}, config implies {tuple(shape)}")
    if expect is not None:
        want = expect.layer_shapes()
        for name, shape in want.items():
            got = tuple(arr[name].shape) if name in arr else None
            if got != tuple(shape):
                raise LoadError(
                    f"{path}: shape mismatch for {name!r}: checkpoint has {got}, configuration expects {tuple(shape)}"
                )
    return params_cls(cfg, {n: np.array(arr[n], dtype=np.float64) for n in cfg.layer_shapes()})


def save_model(folder, vae: VaeParams, mdrnn: MdrnnParams) -> Path:
    folder = Path(folder)
    save_checkpoint(folder, vae, "vae")
    save_checkpoint(folder, mdrnn, "mdrnn")
    return folder


def load_model(folder, vae_expect=None, mdrnn_expect=None):
    """A :class:`~mdnlab.dreamer.Model` from a folder holding both checkpoints."""
    from .dreamer import Model

    folder = Path(folder)
    for kind in ("vae", "mdrnn"):
        if not (folder / f"{kind}.json").exists():
            raise LoadError(f"missing {kind} checkpoint: {folder / f'{kind}.json'}")
    vae = load_checkpoint(folder, "vae", vae_expect)
    mdrnn = load_checkpoint(folder, "mdrnn", mdrnn_expect)
    if vae.config.latent_dim != mdrnn.config.latent_dim:
        raise LoadError(
            f"{folder}: VAE latent size {vae.config.latent_dim} != MD-RNN latent size {mdrnn.config.latent_dim}"
        )
    return Model(folder.name, vae, mdrnn)


# -------------------------------------------------------------------- traces


def trace_name(trace) -> str:
    tag = "free" if trace.committed is None else f"commit{trace.committed}"
    return f"trace_{trace.model_id}_{tag}_{trace.dream_index:04d}"


def save_trace(folder, trace, keep_frames: bool = True) -> Path:
    name = trace_name(trace)
    blob = f"{name}.bin"
    bits, fb, mon = _events_arrays(trace.events)
    meta = {
        "model_id": trace.model_id,
        "dream_index": trace.dream_index,
        "seed": int(trace.seed),
        "mode": trace.mode,
        "committed": trace.committed,
        "pi_temperature": trace.pi_temperature,
        "sigma_temperature": trace.sigma_temperature,
        "steps": len(trace),
        "components": int(trace.pi.shape[1]),
        "latent_dim": int(trace.z.shape[1]),
        "has_frames": bool(keep_frames and trace.frames is not None),
    }
    sections = [
        ("z", blob, trace.z.astype("<f8")),
        ("pi", blob, trace.pi.astype("<f8")),
        ("argmax", blob, trace.argmax.astype(np.uint8)),
        ("sampled", blob, trace.sampled.astype(np.uint8)),
        ("actions", blob, trace.actions.astype(np.uint8)),
        ("event_bits", blob, bits),
        ("fireball_count", blob, fb),
        ("monster_count", blob, mon),
    ]
    if meta["has_frames"]:
        sections.append(("frames", blob, trace.frames.astype(np.uint8)))
    return write_bundle(Path(folder) / f"{name}.json", "trace", meta, sections)


def load_trace(path):
    from .dreamer import DreamTrace

    path = Path(path)
    meta, arr = read_bundle(path, "trace")
    T, K = meta["steps"], meta["components"]
    required = ("z", "pi", "argmax", "sampled", "actions", "event_bits", "fireball_count", "monster_count")
    for name in required:
        if name not in arr:
            raise CorruptFileError(path, 0, f"section {name!r} missing")
        if len(arr[name]) != T:
            raise CorruptFileError(path, 0, f"section {name!r} has {len(arr[name])} rows, manifest says {T}")
    sums = arr["pi"].sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > 1e-9)[0]
    if len(bad):
        sec = next(s for s in json.loads(path.read_text())["sections"] if s["name"] == "pi")
        raise CorruptFileError(path.with_suffix(".bin"), sec["offset"] + int(bad[0]) * K * 8,
                               f"pi row {int(bad[0])} sums to {sums[bad[0]]!r}")
    return DreamTrace(
        model_id=meta["model_id"],
        seed=meta["seed"],
        mode=meta["mode"],
        committed=meta["committed"],
        pi_temperature=meta["pi_temperature"],
        sigma_temperature=meta["sigma_temperature"],
        z=arr["z"],
        pi=arr["pi"],
        argmax=arr["argmax"].astype(np.int64),
        sampled=arr["sampled"].astype(np.int64),
        actions=arr["actions"].astype(np.int64),
        events=_events_from(arr["event_bits"], arr["fireball_count"], arr["monster_count"]),
        frames=arr.get("frames"),
        dream_index=meta["dream_index"],
    )


def list_traces(folder) -> list[Path]:
    return sorted(Path(folder).glob("trace_*.json"))
