"""Run configuration as a flat ``section.key = value`` text file.

Example::

    seed = 7
    env.episodes = 200
    vae.encoder_hidden = 128, 64
    dream.pi_temperature = 1.0

Lines starting with ``#`` are comments. Tuple-valued keys take
comma-separated values. ``MDNLAB_SEED`` and ``MDNLAB_OUT`` in the
environment override the seed and the output directory.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .analysis.events import DetectorThresholds
from .errors import ParameterError
from .mdrnn import MdrnnConfig, SamplerConfig
from .minicover import EnvConfig
from .numcore import derive_seed
from .vae import VaeConfig

SEED_ENV = "MDNLAB_SEED"
OUT_ENV = "MDNLAB_OUT"

# sub-seed keys derived from the global seed
COLLECT_KEY, VAE_KEY, MDRNN_KEY, DREAM_KEY, COMMIT_KEY = 1, 2, 3, 4, 5


class ConfigError(ParameterError):
    pass


@dataclass(frozen=True)
class CollectSettings:
    episodes: int = 200
    max_steps: int = 300
    spawn_prob: float = 0.01
    launch_prob: float = 0.03
    initial_monsters: int = 0

    def env(self) -> EnvConfig:
        return EnvConfig(self.spawn_prob, self.launch_prob, self.max_steps, self.initial_monsters)


@dataclass(frozen=True)
class VaeSettings:
    latent_dim: int = 8
    encoder_hidden: tuple[int, ...] = (128, 64)
    decoder_hidden: tuple[int, ...] = (64, 128)
    epochs: int = 20
    batch: int = 32
    lr: float = 1e-3
    beta: float = 1.0


@dataclass(frozen=True)
class MdrnnSettings:
    hidden: int = 64
    components: int = 5
    seq_len: int = 64
    epochs: int = 20
    batch: int = 16
    lr: float = 1e-3
    models: int = 2
    holdout: float = 0.1


@dataclass(frozen=True)
class DreamSettings:
    steps: int = 500
    dreams_per_model: int = 10
    committed_dreams: int = 10
    pi_temperature: float = 1.0
    sigma_temperature: float = 1.0
    mode: str = "free"


@dataclass(frozen=True)
class Config:
    seed: int = 0
    out: str = "run"
    env: CollectSettings = field(default_factory=CollectSettings)
    vae: VaeSettings = field(default_factory=VaeSettings)
    mdrnn: MdrnnSettings = field(default_factory=MdrnnSettings)
    dream: DreamSettings = field(default_factory=DreamSettings)
    analysis: DetectorThresholds = field(default_factory=DetectorThresholds)

    def validate(self) -> "Config":
        positive = {
            "env.episodes": self.env.episodes, "env.max_steps": self.env.max_steps,
            "vae.latent_dim": self.vae.latent_dim, "vae.epochs": self.vae.epochs, "vae.batch": self.vae.batch,
            "vae.lr": self.vae.lr, "mdrnn.hidden": self.mdrnn.hidden, "mdrnn.components": self.mdrnn.components,
            "mdrnn.seq_len": self.mdrnn.seq_len, "mdrnn.epochs": self.mdrnn.epochs,
            "mdrnn.batch": self.mdrnn.batch, "mdrnn.lr": self.mdrnn.lr, "mdrnn.models": self.mdrnn.models,
            "dream.steps": self.dream.steps, "dream.pi_temperature": self.dream.pi_temperature,
            "dream.sigma_temperature": self.dream.sigma_temperature,
        }
        for key, v in positive.items():
            if not v > 0:
                raise ConfigError(f"{key} must be positive, got {v}")
        for key in ("env.spawn_prob", "env.launch_prob"):
            v = lookup(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{key} must be a probability, got {v}")
        if not 0.0 <= self.mdrnn.holdout < 1.0:
            raise ConfigError(f"mdrnn.holdout must be in [0, 1), got {self.mdrnn.holdout}")
        if self.vae.beta < 0:
            raise ConfigError(f"vae.beta must be >= 0, got {self.vae.beta}")
        if self.dream.dreams_per_model < 0 or self.dream.committed_dreams < 0:
            raise ConfigError("dream counts must be >= 0")
        if self.dream.mode not in ("free", "committed"):
            raise ConfigError(f"dream.mode must be 'free' or 'committed', got {self.dream.mode!r}")
        if any(h <= 0 for h in self.vae.encoder_hidden + self.vae.decoder_hidden):
            raise ConfigError("vae layer sizes must be positive")
        return self

    # model configs, with seeds derived from the global seed

    def vae_config(self) -> VaeConfig:
        v = self.vae
        return VaeConfig(latent_dim=v.latent_dim, encoder_hidden=v.encoder_hidden, decoder_hidden=v.decoder_hidden,
                         epochs=v.epochs, batch=v.batch, lr=v.lr, beta=v.beta, seed=derive_seed(self.seed, VAE_KEY))

    def mdrnn_config(self, replica: int = 0) -> MdrnnConfig:
        m = self.mdrnn
        return MdrnnConfig(latent_dim=self.vae.latent_dim, hidden=m.hidden, components=m.components,
                           seq_len=m.seq_len, epochs=m.epochs, batch=m.batch, lr=m.lr,
                           seed=derive_seed(self.seed, MDRNN_KEY, replica))

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.dream.pi_temperature, self.dream.sigma_temperature)


_SECTIONS = ("env", "vae", "mdrnn", "dream", "analysis")


def keys(cfg: Config = Config()) -> list[str]:
    out = ["seed", "out"]
    for s in _SECTIONS:
        out += [f"{s}.{f.name}" for f in fields(getattr(cfg, s))]
    return out


def lookup(cfg: Config, key: str):
    obj = cfg
    for part in key.split("."):
        obj = getattr(obj, part)
    return obj


def _coerce(key: str, text: str, like):
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if isinstance(like, tuple):
            items = [t.strip() for t in text.split(",") if t.strip()]
            kind = type(like[0]) if like else int
            return tuple(kind(t) for t in items)
        return type(like)(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def with_values(cfg: Config, values: dict[str, object]) -> Config:
    """Copy of ``cfg`` with dotted keys replaced; string values are parsed."""
    known = set(keys(cfg))
    top, sections = {}, {s: {} for s in _SECTIONS}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        current = lookup(cfg, key)
        if isinstance(value, str) and not isinstance(current, str):
            value = _coerce(key, value, current)
        if "." in key:
            s, name = key.split(".", 1)
            sections[s][name] = value
        else:
            top[key] = value
    for s, kw in sections.items():
        if kw:
            top[s] = replace(getattr(cfg, s), **kw)
    return replace(cfg, **top)


def parse(text: str, base: Config = Config(), source: str = "<config>") -> Config:
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        values[k] = v
    return with_values(base, values)


def apply_env(cfg: Config, environ=os.environ) -> Config:
    values = {}
    if environ.get(SEED_ENV):
        values["seed"] = environ[SEED_ENV]
    if environ.get(OUT_ENV):
        values["out"] = environ[OUT_ENV]
    return with_values(cfg, values)


def load(path=None, environ=os.environ) -> Config:
    """Defaults, then the file at ``path`` (if any), then environment overrides."""
    cfg = Config()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as e:
            raise OSError(f"cannot read config {p}: {e.strerror}") from e
        cfg = parse(text, cfg, str(p))
    return apply_env(cfg, environ).validate()


def dump(cfg: Config) -> str:
    lines = []
    for key in keys(cfg):
        v = lookup(cfg, key)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
