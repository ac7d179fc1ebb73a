"""In-memory containers for recorded rollouts and their latent encodings."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis.events import EventFlags
from .minicover import EpisodeLog, dequantize


@dataclass
class Dataset:
    """Concatenated episodes: frames as bytes, with ``starts``/``lengths`` per episode."""

    frames: np.ndarray
    actions: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray
    seeds: list[int]
    events: list[EventFlags] = field(default_factory=list)

    @classmethod
    def from_episodes(cls, episodes: list[EpisodeLog]) -> "Dataset":
        lengths = np.array([len(e) for e in episodes], dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
        return cls(
            frames=np.concatenate([e.frames for e in episodes]),
            actions=np.concatenate([e.actions for e in episodes]).astype(np.uint8),
            starts=starts,
            lengths=lengths,
            seeds=[int(e.seed) for e in episodes],
            events=[f for e in episodes for f in e.events],
        )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def n_episodes(self) -> int:
        return len(self.lengths)

    def float_frames(self, idx=slice(None)) -> np.ndarray:
        return dequantize(self.frames[idx])

    def episode(self, i: int) -> slice:
        s = int(self.starts[i])
        return slice(s, s + int(self.lengths[i]))


@dataclass
class LatentDataset:
    """Per-frame latent means with the episode structure and actions of the source."""

    latents: np.ndarray
    actions: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray
    seeds: list[int]

    def __len__(self) -> int:
        return len(self.latents)

    @property
    def n_episodes(self) -> int:
        return len(self.lengths)

    @property
    def latent_dim(self) -> int:
        return self.latents.shape[1]

    def episode(self, i: int) -> slice:
        s = int(self.starts[i])
        return slice(s, s + int(self.lengths[i]))

    def subset(self, episodes) -> "LatentDataset":
        episodes = list(episodes)
        parts = [self.episode(i) for i in episodes]
        lengths = np.array([self.lengths[i] for i in episodes], dtype=np.int64)
        return LatentDataset(
            latents=np.concatenate([self.latents[p] for p in parts]),
            actions=np.concatenate([self.actions[p] for p in parts]),
            starts=np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64),
            lengths=lengths,
            seeds=[self.seeds[i] for i in episodes],
        )
