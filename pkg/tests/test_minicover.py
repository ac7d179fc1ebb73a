import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdnlab.errors import ParameterError
from mdnlab.minicover import (LANES, PALETTE, STAY, EnvConfig, Fireball, WorldState, collect_episodes, render,
                              reset, run_episode, step)
from mdnlab.numcore import Rng

QUIET = EnvConfig(spawn_prob=0.0, launch_prob=0.0)


def test_fireball_hit_starts_explosion():
    s = WorldState(player_col=12, monsters=(True, False, False, False),
                   fireballs=(Fireball(0, 12, 26, 0, 0),))
    nxt = step(s, STAY, Rng(0), QUIET)
    assert nxt.explosion == (12, 0)
    assert nxt.fireballs == ()


def test_fireball_miss_vanishes():
    s = WorldState(player_col=12, monsters=(True, False, False, False),
                   fireballs=(Fireball(0, 22, 26, 0, 0),))
    nxt = step(s, STAY, Rng(0), QUIET)
    assert nxt.explosion is None
    assert nxt.fireballs == ()


def test_explosion_runs_through_phases_then_ends_episode():
    s = WorldState(player_col=12, explosion=(12, 0))
    phases = []
    while not s.done:
        s = step(s, STAY, Rng(0), QUIET)
        phases.append(None if s.explosion is None else s.explosion[1])
    assert phases == [1, 2, 3, 4, 5, None]


def test_spawn_rate_per_empty_lane():
    # binomial 3-sigma band around 0.01, monsters cleared every step so every lane is always empty
    rng = Rng(77)
    cfg = EnvConfig(spawn_prob=0.01, launch_prob=0.0, max_steps=10**9)
    spawns = trials = 0
    s = WorldState(player_col=16)
    for _ in range(10_000):
        s = step(WorldState(player_col=s.player_col), STAY, rng, cfg)
        spawns += s.spawned
        trials += len(LANES)
    assert 0.007 <= spawns / trials <= 0.013


def test_invalid_action():
    with pytest.raises(ParameterError):
        step(WorldState(player_col=10), 5, Rng(0))


def test_fresh_render_has_only_player_and_floor():
    img = render(WorldState(player_col=16))
    nz = np.argwhere(img != 0)
    expected = {(r, c) for r in (30, 31) for c in range(32)} | {(r, c) for r in (28, 29, 30) for c in (15, 16, 17)}
    assert {tuple(x) for x in nz} == expected
    assert set(np.unique(img[28:30, 15:18])) == {0.9}


def test_left_wall_band_values():
    img = render(WorldState(player_col=2))
    assert set(np.unique(img[:, 0:4])) == {0.45, 0.55}


def _disk_pixels(row, col, radius):
    return sum(1 for r in range(32) for c in range(32) if (r - row) ** 2 + (c - col) ** 2 <= radius ** 2)


def test_full_explosion_covers_enough_pixels():
    img = render(WorldState(player_col=16, explosion=(16, 5)))
    disk = _disk_pixels(27, 16, 8)
    assert disk / 1024 > 0.08
    assert np.mean(img >= 0.8) >= disk / 1024


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**63))
def test_rendered_pixels_in_palette(seed):
    rng = Rng(seed)
    cfg = EnvConfig(max_steps=60, spawn_prob=0.2, launch_prob=0.3)
    s = reset(rng, cfg)
    values = set()
    while not s.done:
        values |= set(np.unique(render(s)).tolist())
        s = step(s, rng.integer(3), rng, cfg)
    assert values <= set(PALETTE)


def test_stored_frames_are_byte_quantized_renders():
    ep = run_episode(31, EnvConfig(max_steps=20))
    assert ep.frames.dtype == np.uint8
    assert set(np.unique(ep.frames).tolist()) <= {round(v * 255) for v in PALETTE}


def test_collect_deterministic():
    a, b = collect_episodes(1, 300, 5), collect_episodes(1, 300, 5)
    np.testing.assert_array_equal(a[0].frames, b[0].frames)
    np.testing.assert_array_equal(a[0].actions, b[0].actions)
    assert a[0].events == b[0].events


def test_replay_reproduces_frames():
    ep = run_episode(2024)
    again = run_episode(2024, actions=ep.actions)
    np.testing.assert_array_equal(ep.frames, again.frames)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**63))
def test_monster_lanes_never_clear(seed):
    rng = Rng(seed)
    s = reset(rng, EnvConfig(spawn_prob=0.05))
    prev = s.monsters
    while not s.done:
        s = step(s, rng.integer(3), rng, EnvConfig(spawn_prob=0.05))
        assert all(p <= c for p, c in zip(prev, s.monsters))
        prev = s.monsters


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63), st.integers(2, 29), st.integers(0, 3))
def test_fireball_trajectory_is_pure(seed, player, lane):
    # after launch the path and vanishing step do not depend on the random stream
    s = WorldState(player_col=player, monsters=(True,) * 4,
                   fireballs=(Fireball(lane, LANES[lane], 5, int(np.sign(player - LANES[lane]))),))

    def path(rng_seed):
        st_, out = s, []
        r = Rng(rng_seed)
        while st_.fireballs and any(f.lane == lane for f in st_.fireballs):
            st_ = step(st_, STAY, r, QUIET)
            out.append([(f.col, f.row) for f in st_.fireballs if f.lane == lane])
        return out, st_.explosion

    assert path(seed) == path(seed + 1)


def test_desk_collection_bounds():
    eps = collect_episodes(200, 300, 1234)
    total = sum(len(e) for e in eps)
    assert total <= 60_000
    for e in eps:
        assert len(e) == 300 or e.events[-1].explosion_active
    explosion = sum(ev.explosion_active for e in eps for ev in e.events) / total
    # measured 0.0415 on this simulator; regression band from the spec
    assert 0.005 <= explosion <= 0.15
