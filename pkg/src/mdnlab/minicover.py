"""MiniCover: a seeded 32x32 grayscale dodge-the-fireball room.

Four monster lanes sit at the top of the room. Monsters appear at random
and never leave; each one may launch a fireball that falls toward the
floor while drifting toward where the player stood at launch time. A
fireball landing within two columns of the player explodes; the episode
ends once the explosion has played out. Walls slide into view when the
player is close to either edge.

Random draws per :func:`step`, in order: one spawn draw for each empty lane
(lane order), then one launch draw for each monster without a live
fireball (lane order). The player's policy uses a separate stream, so
replaying ``(seed, actions)`` reproduces an episode exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .analysis.events import EventFlags
from .errors import ParameterError
from .numcore.rng import Rng, derive_seed

WIDTH = HEIGHT = 32
LANES = (4, 12, 20, 28)
PLAYER_MIN, PLAYER_MAX = 2, 29
LAUNCH_ROW = 5
IMPACT_ROW = 27
HIT_RADIUS = 2
LAST_PHASE = 5
LEFT, STAY, RIGHT = 0, 1, 2
N_ACTIONS = 3

BACKGROUND = 0.0
FLOOR = 0.3
WALL = 0.45
WALL_STRIPE = 0.55
MONSTER = 0.6
PLAYER = 0.9
FIREBALL = 1.0
EXPLOSION = 1.0
PALETTE = (BACKGROUND, FLOOR, WALL, WALL_STRIPE, MONSTER, PLAYER, FIREBALL)


@dataclass(frozen=True)
class EnvConfig:
    spawn_prob: float = 0.01
    launch_prob: float = 0.03
    max_steps: int = 300
    initial_monsters: int = 0


@dataclass(frozen=True)
class Fireball:
    lane: int
    col: int
    row: int
    direction: int
    age: int = 0


@dataclass(frozen=True)
class WorldState:
    player_col: int
    monsters: tuple[bool, ...] = (False,) * len(LANES)
    fireballs: tuple[Fireball, ...] = ()
    explosion: tuple[int, int] | None = None
    step_count: int = 0
    done: bool = False
    spawned: int = 0
    launched: int = 0

    def validate(self) -> None:
        if not PLAYER_MIN <= self.player_col <= PLAYER_MAX:
            raise ParameterError(f"player_col {self.player_col} outside [{PLAYER_MIN}, {PLAYER_MAX}]")
        if len(self.monsters) != len(LANES):
            raise ParameterError("monsters must have one flag per lane")
        lanes = [f.lane for f in self.fireballs]
        if len(set(lanes)) != len(lanes):
            raise ParameterError("at most one live fireball per monster")
        for lane in lanes:
            if not self.monsters[lane]:
                raise ParameterError(f"fireball from empty lane {lane}")
        if self.explosion is not None and not 0 <= self.explosion[1] <= LAST_PHASE:
            raise ParameterError(f"explosion phase {self.explosion[1]} outside [0, {LAST_PHASE}]")


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


def reset(rng: Rng, config: EnvConfig = EnvConfig()) -> WorldState:
    player = PLAYER_MIN + rng.integer(PLAYER_MAX - PLAYER_MIN + 1)
    monsters = [False] * len(LANES)
    for _ in range(min(config.initial_monsters, len(LANES))):
        empty = [i for i, m in enumerate(monsters) if not m]
        monsters[empty[rng.integer(len(empty))]] = True
    return WorldState(player_col=player, monsters=tuple(monsters))


def step(state: WorldState, action: int, rng: Rng, config: EnvConfig = EnvConfig()) -> WorldState:
    """Advance the world by one tick."""
    if action not in (LEFT, STAY, RIGHT):
        raise ParameterError(f"invalid action code {action!r}; expected 0, 1 or 2")
    player = min(max(state.player_col + action - 1, PLAYER_MIN), PLAYER_MAX)
    count = state.step_count + 1
    done = False

    explosion = state.explosion
    if explosion is not None:
        phase = explosion[1] + 1
        if phase > LAST_PHASE:
            explosion = None
            done = True
        else:
            explosion = (explosion[0], phase)

    monsters = list(state.monsters)
    spawned = 0
    for lane in range(len(LANES)):
        if not monsters[lane] and rng.uniform() < config.spawn_prob:
            monsters[lane] = True
            spawned += 1

    busy = {f.lane for f in state.fireballs}
    fireballs = list(state.fireballs)
    launched = 0
    for lane, col in enumerate(LANES):
        if monsters[lane] and lane not in busy and rng.uniform() < config.launch_prob:
            fireballs.append(Fireball(lane, col, LAUNCH_ROW, _sign(player - col)))
            launched += 1

    moved = []
    for f in fireballs:
        age = f.age + 1
        col = f.col + f.direction if age % 2 == 0 else f.col
        col = min(max(col, 0), WIDTH - 2)
        row = f.row + 1
        if row >= IMPACT_ROW:
            if abs(col - player) <= HIT_RADIUS and explosion is None and not done:
                explosion = (col, 0)
            continue
        moved.append(Fireball(f.lane, col, row, f.direction, age))

    if count >= config.max_steps:
        done = True
    return WorldState(
        player_col=player,
        monsters=tuple(monsters),
        fireballs=tuple(moved),
        explosion=explosion,
        step_count=count,
        done=done,
        spawned=spawned,
        launched=launched,
    )


_YY, _XX = np.mgrid[0:HEIGHT, 0:WIDTH]


def render(state: WorldState) -> np.ndarray:
    """Rasterise a state into a 32x32 float frame (later layers overdraw earlier ones)."""
    img = np.zeros((HEIGHT, WIDTH))
    img[30:32, :] = FLOOR
    p = state.player_col
    img[28:31, p - 1:p + 2] = PLAYER
    for lane, present in enumerate(state.monsters):
        if present:
            c = LANES[lane]
            img[2:5, c - 1:c + 2] = MONSTER
    for f in state.fireballs:
        img[f.row:f.row + 2, f.col:f.col + 2] = FIREBALL
    if state.explosion is not None:
        col, phase = state.explosion
        radius = 3 + phase
        img[(_YY - IMPACT_ROW) ** 2 + (_XX - col) ** 2 <= radius * radius] = EXPLOSION
    if p <= 5:
        _wall(img, slice(0, 6 - p))
    if p >= 26:
        _wall(img, slice(WIDTH - (p - 25), WIDTH))
    return img


def _wall(img: np.ndarray, cols: slice) -> None:
    img[:, cols] = WALL
    img[0::4, cols] = WALL_STRIPE


def ground_truth(state: WorldState, first: bool) -> EventFlags:
    """Event flags read from simulator state rather than pixels.

    ``first`` marks the opening frame of an episode, where nothing can have
    just appeared. Fireballs count once fully inside the mid-air band
    (footprint below the monsters and above the impact row); walls count
    once they cover at least two columns.
    """
    fireballs = sum(1 for f in state.fireballs if f.row <= IMPACT_ROW - 2)
    return EventFlags(
        fireball_present=fireballs > 0,
        fireball_appeared=not first and state.launched > 0,
        monster_appeared=not first and state.spawned > 0,
        explosion_active=state.explosion is not None,
        wall_left=state.player_col <= 4,
        wall_right=state.player_col >= 27,
        fireball_count=fireballs,
        monster_count=sum(state.monsters),
    )


def quantize(frame: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(frame) * 255.0).astype(np.uint8)


def dequantize(frames: np.ndarray) -> np.ndarray:
    return np.asarray(frames, dtype=np.float64) / 255.0


@dataclass
class EpisodeLog:
    """One recorded rollout.

    ``frames[t]`` is the observation at time ``t`` stored as bytes
    (``round(pixel * 255)``) and ``actions[t]`` the action chosen after seeing
    it; the episode ends when the world signals termination.
    """

    seed: int
    actions: np.ndarray
    frames: np.ndarray
    events: list[EventFlags] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def float_frames(self) -> np.ndarray:
        return dequantize(self.frames)


def run_episode(seed: int, config: EnvConfig = EnvConfig(), actions=None) -> EpisodeLog:
    """Roll out one episode; with ``actions`` given, replay them instead of sampling."""
    env_rng = Rng(derive_seed(seed, 0))
    policy_rng = Rng(derive_seed(seed, 1))
    state = reset(env_rng, config)
    frames, acts, events = [], [], []
    t = 0
    while True:
        frames.append(quantize(render(state)))
        events.append(ground_truth(state, first=t == 0))
        if actions is None:
            a = policy_rng.integer(N_ACTIONS)
        else:
            a = int(actions[t])
        acts.append(a)
        state = step(state, a, env_rng, config)
        t += 1
        if state.done or (actions is not None and t >= len(actions)):
            break
    return EpisodeLog(seed, np.array(acts, dtype=np.uint8), np.stack(frames), events)


def collect_episodes(count: int, max_steps: int, seed: int, config: EnvConfig = EnvConfig()) -> list[EpisodeLog]:
    """Random-policy episodes; episode ``i`` uses child seed ``derive_seed(seed, i)``."""
    if count < 1:
        raise ParameterError(f"episode count must be >= 1, got {count}")
    if max_steps < 1:
        raise ParameterError(f"max_steps must be >= 1, got {max_steps}")
    cfg = replace(config, max_steps=max_steps)
    return [run_episode(derive_seed(seed, i), cfg) for i in range(count)]
