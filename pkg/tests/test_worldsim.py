import dataclasses
import math

import numpy as np
import pytest

from policymap import worldsim as ws
from policymap.accel import NUMBA_ENABLED
from policymap.worldsim import render as rd
from policymap.worldsim.world import _build_object_arrays

from oracle_render import oracle_render, random_scene, scene_arrays


def make_single_object_state(x, y, width=0.2, height=1.0, role="target",
                             reward=1.0, max_steps=200, env=None):
    """WorldState with one object at an explicit position, agent at origin."""
    task = dataclasses.make_dataclass(
        "T", ["mode", "reward", "max_steps", "objects", "d_mean", "d_jit", "bearings_deg"]
    )(
        mode="rgb", reward=reward, max_steps=max_steps, objects=[], d_mean=5.0,
        d_jit=1.0, bearings_deg=(-36.0, -18.0, 0.0, 18.0, 36.0),
    )
    obj = ws.ObjectInstance(
        type=ws.ObjectType(color=(0.8, 0.1, 0.1), height=height, width=width, reward=reward),
        x=x, y=y, role=role,
    )
    state = ws.WorldState(task=task, env=env or ws.EnvParams(), pose=ws.Pose(), objects=[obj])
    _build_object_arrays(state)
    return state


# --------------------------------------------------------------------- reset


def test_reset_determinism_bitwise(suite):
    s1, f1 = ws.world_reset(suite[0], 77)
    s2, f2 = ws.world_reset(suite[0], 77)
    assert np.array_equal(f1.data, f2.data)
    assert [(o.x, o.y) for o in s1.objects] == [(o.x, o.y) for o in s2.objects]
    assert (s1.pose.x, s1.pose.y, s1.pose.heading) == (s2.pose.x, s2.pose.y, s2.pose.heading)


def test_reset_agent_at_origin_facing_x(suite):
    state, _ = ws.world_reset(suite[0], 3)
    assert state.pose.x == 0.0 and state.pose.y == 0.0 and state.pose.heading == 0.0
    assert state.step_count == 0 and not state.done


def test_reset_slot_assignment_uniform(suite):
    counts = np.zeros((5, 5), dtype=int)  # object index x slot
    bearings = np.asarray(suite[0].bearings_deg)
    for seed in range(1000):
        state, _ = ws.world_reset(suite[0], seed)
        for i, obj in enumerate(state.objects):
            ang = math.degrees(math.atan2(obj.y, obj.x))
            slot = int(np.argmin(np.abs(bearings - ang)))
            counts[i, slot] += 1
    assert counts.sum() == 5000
    assert np.all(counts >= 150) and np.all(counts <= 250)


def test_reset_distances_within_jitter(suite):
    for seed in range(50):
        state, _ = ws.world_reset(suite[0], seed)
        for obj in state.objects:
            d = math.hypot(obj.x, obj.y)
            assert suite[0].d_mean - suite[0].d_jit <= d <= suite[0].d_mean + suite[0].d_jit


def test_reset_all_objects_visible(suite):
    for seed in range(25):
        state, _ = ws.world_reset(suite[0], seed)
        hits = ws.column_hits(state)
        seen = set(hits[hits >= 0].tolist())
        assert seen == set(range(5)), f"seed {seed}: objects {seen} visible"


def test_reset_rejects_missing_target(suite):
    bad = dataclasses.replace(suite[0])
    bad.objects = [dataclasses.replace(o, role="background") for o in suite[0].objects]
    with pytest.raises(ValueError):
        ws.world_reset(bad, 0)


# ---------------------------------------------------------------- kinematics


def test_exactly_seven_forward_steps_to_reach():
    # object 1 unit ahead, width 0.2 -> reach radius 0.4, step 0.1
    state = make_single_object_state(1.0, 0.0, width=0.2)
    for step in range(1, 8):
        frame, reward, done = ws.world_step(state, 0)
        if step < 7:
            assert not done, f"terminated early at step {step}"
    assert done and reward == 1.0
    assert state.step_count == 7


def test_reaching_decoy_gives_zero_reward():
    state = make_single_object_state(1.0, 0.0, width=0.2, role="decoy")
    done = False
    while not done:
        _, reward, done = ws.world_step(state, 0)
    assert reward == 0.0 and state.done


def test_turn_left_right_restores_pose_bitwise(suite):
    state, _ = ws.world_reset(suite[0], 5)
    p0 = (state.pose.x, state.pose.y, state.pose.turns, state.pose.heading)
    ws.world_step(state, 1)
    ws.world_step(state, 2)
    assert (state.pose.x, state.pose.y, state.pose.turns, state.pose.heading) == p0


def test_turn_while_moving_uses_post_turn_heading():
    env = ws.EnvParams()
    state = make_single_object_state(50.0, 0.0, env=env)
    ws.world_step(state, 3)  # turn left then forward
    expected = math.radians(env.turn_deg)
    assert state.pose.heading == pytest.approx(expected)
    assert state.pose.x == pytest.approx(env.step_size * math.cos(expected))
    assert state.pose.y == pytest.approx(env.step_size * math.sin(expected))


def test_heading_normalized_to_unit_circle():
    state = make_single_object_state(50.0, 0.0)
    for _ in range(70):  # more than a full circle of left turns
        ws.world_step(state, 1)
    assert 0.0 <= state.pose.heading < 2 * math.pi


def test_episode_ends_at_max_steps():
    state = make_single_object_state(50.0, 0.0, max_steps=25)
    done = False
    n = 0
    while not done:
        _, reward, done = ws.world_step(state, 1)
        n += 1
    assert n == 25 and reward == 0.0


def test_step_after_done_rejected():
    state = make_single_object_state(50.0, 0.0, max_steps=3)
    for _ in range(3):
        ws.world_step(state, 0)
    with pytest.raises(RuntimeError):
        ws.world_step(state, 0)


def test_invalid_action_rejected(suite):
    state, _ = ws.world_reset(suite[0], 0)
    with pytest.raises(ValueError):
        ws.world_step(state, 5)
    with pytest.raises(ValueError):
        ws.world_step(state, -1)
    with pytest.raises(ValueError):
        ws.world_step(state, 2.0)


def test_episode_reward_structure(suite):
    # total reward is 0 or the task constant, positive iff target reached
    rng = np.random.default_rng(0)
    for seed in range(30):
        state, _ = ws.world_reset(suite[0], seed)
        total = 0.0
        done = False
        while not done:
            _, r, done = ws.world_step(state, int(rng.integers(5)))
            total += r
        assert total in (0.0, suite[0].reward)
        if total > 0:
            dists = [math.hypot(o.x - state.pose.x, o.y - state.pose.y) for o in state.objects]
            assert state.objects[int(np.argmin(dists))].role == "target"


def test_full_episode_determinism(suite):
    def run():
        rng = np.random.default_rng(9)
        state, frame = ws.world_reset(suite[1], 42)
        frames = [frame.data]
        rewards = []
        done = False
        while not done:
            f, r, done = ws.world_step(state, int(rng.integers(5)))
            frames.append(f.data)
            rewards.append(r)
        return frames, rewards

    f1, r1 = run()
    f2, r2 = run()
    assert r1 == r2 and len(f1) == len(f2)
    for a, b in zip(f1, f2):
        assert np.array_equal(a, b)


# ------------------------------------------------------------------ renderer


def test_render_empty_world_sky_and_ground():
    state = make_single_object_state(50.0, 0.0)
    state.objects = []
    _build_object_arrays(state)
    frame = ws.render_frame(state, "rgb")
    env = state.env
    for ch in range(3):
        assert np.all(frame.data[ch, :42, :] == np.float32(env.sky[ch]))
        assert np.all(frame.data[ch, 42:, :] == np.float32(env.ground[ch]))


def test_render_object_ahead_hits_center_not_edge():
    state = make_single_object_state(5.0, 0.0, width=0.6, height=1.2)
    frame = ws.render_frame(state, "saliency")
    assert frame.data[0, 42, 41] == 1.0 or frame.data[0, 42, 42] == 1.0
    assert frame.data[0, :, 0].max() == 0.0


def test_saliency_matches_rgb_hit_pixels(suite):
    for seed in (1, 4, 9):
        state, _ = ws.world_reset(suite[2], seed)
        rgb = ws.render_frame(state, "rgb").data
        sal = ws.render_frame(state, "saliency").data[0]
        env = state.env
        bg = np.empty((3, 84, 84), dtype=np.float32)
        for ch in range(3):
            bg[ch, :42, :] = env.sky[ch]
            bg[ch, 42:, :] = env.ground[ch]
        differs = np.any(rgb != bg, axis=0)
        assert np.array_equal(differs, sal == 1.0)


def test_saliency_frames_binary(suite):
    state, frame = ws.world_reset(dataclasses.replace(suite[0], mode="saliency"), 3)
    assert set(np.unique(frame.data)).issubset({0.0, 1.0})


def test_pixel_height_non_increasing_with_distance():
    heights = []
    for d in (2.0, 3.0, 4.5, 6.0, 9.0, 14.0):
        state = make_single_object_state(d, 0.0, width=0.6, height=1.2)
        sal = ws.render_frame(state, "saliency").data[0]
        heights.append(int(sal[:, 42].sum()))
    assert all(a >= b for a, b in zip(heights, heights[1:]))
    assert heights[0] > heights[-1]


def test_render_unknown_mode_rejected(suite):
    state, _ = ws.world_reset(suite[0], 0)
    with pytest.raises(ValueError):
        ws.render_frame(state, "depth")


# ------------------------------------------------------------ oracle parity


def test_renderer_matches_bruteforce_oracle_exactly():
    env = ws.EnvParams()
    sky = np.asarray(env.sky)
    ground = np.asarray(env.ground)
    rng = np.random.default_rng(123)
    for _ in range(60):
        (px, py, heading), objects = random_scene(rng)
        xy, radius, height, color = scene_arrays(objects)
        got = rd.render_rgb(px, py, heading, xy, radius, height, color, sky, ground, env.d_fade)
        want = oracle_render(px, py, heading, objects, env.sky, env.ground, env.d_fade, "rgb")
        assert np.array_equal(got, want)
        got_s = rd.render_saliency(px, py, heading, xy, radius, height)
        want_s = oracle_render(px, py, heading, objects, env.sky, env.ground, env.d_fade,
                               "saliency")
        assert np.array_equal(got_s, want_s)


def test_render_backends_bitwise_equal(suite):
    if not NUMBA_ENABLED:
        pytest.skip("numba backend not active")
    env = ws.EnvParams()
    sky = np.asarray(env.sky)
    ground = np.asarray(env.ground)
    rng = np.random.default_rng(5)
    for _ in range(30):
        (px, py, heading), objects = random_scene(rng, max_objects=6)
        xy, radius, height, color = scene_arrays(objects)
        a = rd.render_rgb_numba(px, py, heading, xy, radius, height, color, sky, ground, env.d_fade)
        b = rd.render_rgb_numpy(px, py, heading, xy, radius, height, color, sky, ground, env.d_fade)
        assert np.array_equal(a, b)
        sa = rd.render_saliency_numba(px, py, heading, xy, radius, height)
        sb = rd.render_saliency_numpy(px, py, heading, xy, radius, height)
        assert np.array_equal(sa, sb)


# ----------------------------------------------------------------- bench/ppm


def test_bench_fps_monotone_in_objects(suite):
    state0, _ = ws.world_reset(suite[0], 0)
    state0.objects = []
    _build_object_arrays(state0)
    rng = np.random.default_rng(0)
    objs = []
    for _ in range(20):
        t = ws.ObjectType(color=tuple(rng.random(3)), height=1.0, width=0.6)
        objs.append(ws.ObjectInstance(type=t, x=float(rng.uniform(-8, 8)),
                                      y=float(rng.uniform(-8, 8)), role="background"))
    state20, _ = ws.world_reset(suite[0], 0)
    state20.objects = objs
    _build_object_arrays(state20)
    fps0 = ws.bench_fps(state0, 1000)
    fps20 = ws.bench_fps(state20, 1000)
    assert fps0 >= fps20 * 0.85  # monotone work up to timing noise


def test_bench_fps_rejects_bad_count(suite):
    state, _ = ws.world_reset(suite[0], 0)
    with pytest.raises(ValueError):
        ws.bench_fps(state, 0)


def test_ppm_dump(tmp_path, suite):
    state, frame = ws.world_reset(suite[0], 0)
    path = tmp_path / "frame.ppm"
    ws.write_ppm(path, frame.data)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n84 84\n255\n")
    assert len(raw) == len(b"P6\n84 84\n255\n") + 84 * 84 * 3
    ws.write_ppm(tmp_path / "frame2.ppm", frame.data)
    assert raw == (tmp_path / "frame2.ppm").read_bytes()


def test_ppm_rejects_wrong_shape(tmp_path):
    with pytest.raises(ValueError):
        ws.write_ppm(tmp_path / "x.ppm", np.zeros((1, 84, 84), dtype=np.float32))
