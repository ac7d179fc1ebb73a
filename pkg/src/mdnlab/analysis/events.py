"""Per-frame event flags and the threshold-based pixel detectors."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .. import kernels

FLAG_NAMES = (
    "fireball_present",
    "fireball_appeared",
    "monster_appeared",
    "explosion_active",
    "wall_left",
    "wall_right",
)

TRACKED_EVENTS = ("fireball_appeared", "monster_appeared", "explosion_active", "wall_left", "wall_right")


@dataclass(frozen=True)
class EventFlags:
    fireball_present: bool = False
    fireball_appeared: bool = False
    monster_appeared: bool = False
    explosion_active: bool = False
    wall_left: bool = False
    wall_right: bool = False
    fireball_count: int = 0
    monster_count: int = 0

    def bits(self) -> int:
        """Boolean flags packed LSB-first in ``FLAG_NAMES`` order."""
        return sum(1 << i for i, name in enumerate(FLAG_NAMES) if getattr(self, name))

    @classmethod
    def from_bits(cls, bits: int, fireball_count: int = 0, monster_count: int = 0) -> "EventFlags":
        kw = {name: bool(bits >> i & 1) for i, name in enumerate(FLAG_NAMES)}
        return cls(**kw, fireball_count=int(fireball_count), monster_count=int(monster_count))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DetectorThresholds:
    fireball_min: float = 0.85
    fireball_rows: tuple[int, int] = (6, 26)
    fireball_area: tuple[int, int] = (1, 9)
    monster_range: tuple[float, float] = (0.5, 0.7)
    monster_rows: tuple[int, int] = (1, 5)
    monster_area: tuple[int, int] = (4, 12)
    explosion_pixel: float = 0.8
    explosion_fraction: float = 0.08
    wall_cols: int = 3
    wall_rows: tuple[int, int] = (8, 24)
    wall_range: tuple[float, float] = (0.30, 0.65)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


DEFAULT_THRESHOLDS = DetectorThresholds()


def _count_regions(mask: np.ndarray, rows: tuple[int, int], area: tuple[int, int]) -> int:
    regions = kernels.label_regions(mask)
    if len(regions) == 0:
        return 0
    a, rmin, rmax = regions[:, 0], regions[:, 1], regions[:, 2]
    ok = (rmin >= rows[0]) & (rmax <= rows[1]) & (a >= area[0]) & (a <= area[1])
    return int(ok.sum())


def _counts(frame: np.ndarray, th: DetectorThresholds) -> tuple[int, int]:
    fireballs = _count_regions(frame > th.fireball_min, th.fireball_rows, th.fireball_area)
    lo, hi = th.monster_range
    monsters = _count_regions((frame >= lo) & (frame <= hi), th.monster_rows, th.monster_area)
    return fireballs, monsters


def _scan(frame, th: DetectorThresholds) -> tuple[int, int, bool, bool, bool]:
    f = np.asarray(frame, dtype=np.float64)
    fireballs, monsters = _counts(f, th)
    explosion = float(np.mean(f > th.explosion_pixel)) > th.explosion_fraction
    r0, r1 = th.wall_rows
    lo, hi = th.wall_range
    left = float(f[r0:r1 + 1, : th.wall_cols].mean())
    right = float(f[r0:r1 + 1, -th.wall_cols:].mean())
    return fireballs, monsters, explosion, lo <= left <= hi, lo <= right <= hi


def _flags(scan, prev_counts) -> EventFlags:
    fb, mon, explosion, left, right = scan
    return EventFlags(
        fireball_present=fb > 0,
        fireball_appeared=prev_counts is not None and fb > prev_counts[0],
        monster_appeared=prev_counts is not None and mon > prev_counts[1],
        explosion_active=explosion,
        wall_left=left,
        wall_right=right,
        fireball_count=fb,
        monster_count=mon,
    )


def detect_events(frame, prev=None, thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> EventFlags:
    """Classify one frame, using ``prev`` (if given) for the appearance flags."""
    prev_counts = None if prev is None else _counts(np.asarray(prev, dtype=np.float64), thresholds)
    return _flags(_scan(frame, thresholds), prev_counts)


def detect_sequence(frames, thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> list[EventFlags]:
    """Detect events over a frame sequence; the first frame has no predecessor."""
    out: list[EventFlags] = []
    prev_counts = None
    for frame in frames:
        scan = _scan(frame, thresholds)
        out.append(_flags(scan, prev_counts))
        prev_counts = scan[:2]
    return out


def agreement_rates(episodes_frames, truth, thresholds: DetectorThresholds = DEFAULT_THRESHOLDS) -> dict[str, float]:
    """Fraction of frames on which each detected flag equals the ground-truth flag.

    ``episodes_frames`` is a list of per-episode frame arrays and ``truth`` the
    matching list of per-episode :class:`EventFlags` lists; detection restarts
    at each episode boundary.
    """
    hits = dict.fromkeys(FLAG_NAMES, 0)
    total = 0
    for frames, gt in zip(episodes_frames, truth):
        got = detect_sequence(frames, thresholds)
        total += len(got)
        for name in FLAG_NAMES:
            hits[name] += sum(getattr(a, name) == getattr(b, name) for a, b in zip(got, gt))
    return {name: hits[name] / max(total, 1) for name in FLAG_NAMES}
