"""Open-world episode state: placement, kinematics, reward, termination.

The world is a flat 2-D plane with no walls; the agent may wander anywhere.
An episode ends when the agent gets within reach of any object (reward only
if that object is the target) or when the step budget runs out.

Five actions: 0 forward, 1 turn left, 2 turn right, 3 turn left + forward,
4 turn right + forward.  Turns are whole increments of ``turn_deg``, tracked
as an integer count so that a left turn followed by a right turn restores
the pose bit-for-bit; translation happens after the turn.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import render
from .render import FOCAL, IMAGE_SIZE

N_ACTIONS = 5


@dataclass
class EnvParams:
    """World constants shared by every task; configurable via the harness."""

    step_size: float = 0.1
    turn_deg: float = 6.0
    reach_base: float = 0.3
    d_fade: float = 12.0
    sky: tuple = (0.53, 0.81, 0.92)
    ground: tuple = (0.33, 0.42, 0.18)


@dataclass
class ObjectType:
    """Visual and reward definition of one object kind."""

    color: tuple  # rgb in [0,1]
    height: float
    width: float
    reward: float = 0.0

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError(f"object height/width must be positive, got {self.height}, {self.width}")


@dataclass
class ObjectInstance:
    type: ObjectType
    x: float = 0.0
    y: float = 0.0
    role: str = "background"  # target | decoy | background


@dataclass
class Pose:
    x: float = 0.0
    y: float = 0.0
    turns: int = 0  # net left-turn count; heading derived from it
    heading: float = 0.0  # radians in [0, 2pi), kept in sync with turns


@dataclass
class Frame:
    mode: str  # rgb | saliency
    data: np.ndarray  # (3,84,84) or (1,84,84) float32 in [0,1]


@dataclass
class WorldState:
    task: object
    env: EnvParams
    pose: Pose
    objects: list
    step_count: int = 0
    done: bool = False
    rng: np.random.Generator | None = None
    # flat object arrays for the render kernels, built once at reset
    _xy: np.ndarray = field(default=None, repr=False)
    _radius: np.ndarray = field(default=None, repr=False)
    _height: np.ndarray = field(default=None, repr=False)
    _color: np.ndarray = field(default=None, repr=False)


def _heading_from_turns(turns: int, turn_deg: float) -> float:
    return math.radians((turns * turn_deg) % 360.0)


def _build_object_arrays(state: WorldState) -> None:
    objs = state.objects
    state._xy = np.array([[o.x, o.y] for o in objs], dtype=np.float64).reshape(len(objs), 2)
    state._radius = np.array([o.type.width * 0.5 for o in objs], dtype=np.float64)
    state._height = np.array([o.type.height for o in objs], dtype=np.float64)
    state._color = np.array([o.type.color for o in objs], dtype=np.float64).reshape(len(objs), 3)


def render_frame(state: WorldState, mode: str) -> Frame:
    """Draw the current state; ``mode`` is ``rgb`` or ``saliency``."""
    p = state.pose
    if mode == "rgb":
        sky = np.asarray(state.env.sky, dtype=np.float64)
        ground = np.asarray(state.env.ground, dtype=np.float64)
        data = render.render_rgb(
            p.x, p.y, p.heading, state._xy, state._radius, state._height, state._color,
            sky, ground, state.env.d_fade,
        )
    elif mode == "saliency":
        data = render.render_saliency(p.x, p.y, p.heading, state._xy, state._radius, state._height)
    else:
        raise ValueError(f"unknown render mode {mode!r}")
    return Frame(mode=mode, data=data)


def world_reset(task, seed: int, env: EnvParams | None = None):
    """Place objects and return ``(WorldState, Frame)``.

    The agent starts at the origin facing +x.  Each object is assigned one of
    the task's bearing slots by a seeded permutation and a distance drawn
    uniformly from ``d_mean +- d_jit``.
    """
    env = env or EnvParams()
    templates = list(task.objects)
    if not templates:
        raise ValueError("task has no objects")
    n_targets = sum(1 for o in templates if o.role == "target")
    if n_targets != 1:
        raise ValueError(f"task must have exactly one target object, got {n_targets}")
    bearings = list(task.bearings_deg)
    if len(templates) > len(bearings):
        raise ValueError(
            f"{len(templates)} objects but only {len(bearings)} bearing slots"
        )
    rng = np.random.default_rng(seed)
    slots = rng.permutation(len(bearings))[: len(templates)]
    placed = []
    for obj, slot in zip(templates, slots):
        d = rng.uniform(task.d_mean - task.d_jit, task.d_mean + task.d_jit)
        b = math.radians(bearings[slot])
        placed.append(replace(obj, x=d * math.cos(b), y=d * math.sin(b)))
    state = WorldState(
        task=task, env=env, pose=Pose(), objects=placed, rng=rng,
    )
    _build_object_arrays(state)
    return state, render_frame(state, task.mode)


def world_step(state: WorldState, action: int):
    """Advance one step; returns ``(Frame, reward, done)``."""
    if state.done:
        raise RuntimeError("world_step called on a finished episode")
    if not isinstance(action, (int, np.integer)) or not 0 <= action < N_ACTIONS:
        raise ValueError(f"action must be an integer in [0, {N_ACTIONS}), got {action!r}")
    env = state.env
    p = state.pose
    if action in (1, 3):
        p.turns += 1
    elif action in (2, 4):
        p.turns -= 1
    p.heading = _heading_from_turns(p.turns, env.turn_deg)
    if action in (0, 3, 4):
        p.x += env.step_size * math.cos(p.heading)
        p.y += env.step_size * math.sin(p.heading)
    state.step_count += 1

    reward = 0.0
    dx = state._xy[:, 0] - p.x
    dy = state._xy[:, 1] - p.y
    dist = np.sqrt(dx * dx + dy * dy)
    j = int(np.argmin(dist))
    if dist[j] < env.reach_base + state._radius[j]:
        state.done = True
        if state.objects[j].role == "target":
            reward = float(state.task.reward)
    elif state.step_count >= state.task.max_steps:
        state.done = True
    return render_frame(state, state.task.mode), reward, state.done


def column_hits(state: WorldState):
    """Per-column nearest-object index (-1 where no object is hit).

    Diagnostic helper used by placement checks; always runs the numpy path.
    """
    p = state.pose
    t, idx, hit = render._intersect_columns_numpy(
        p.x, p.y, p.heading, state._xy, state._radius
    )
    return np.where(hit, idx, -1)


def bench_fps(state: WorldState, n_frames: int, mode: str = "rgb") -> float:
    """Single-thread render throughput on the given state.

    Rotates the camera one turn increment per frame so successive frames
    differ; includes a small warmup (JIT compile + caches) outside timing.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    base = state.pose.turns
    for k in range(10):
        state.pose.heading = _heading_from_turns(base + k, state.env.turn_deg)
        render_frame(state, mode)
    t0 = time.perf_counter()
    for k in range(n_frames):
        state.pose.heading = _heading_from_turns(base + k, state.env.turn_deg)
        render_frame(state, mode)
    elapsed = time.perf_counter() - t0
    state.pose.heading = _heading_from_turns(base, state.env.turn_deg)
    return n_frames / elapsed
