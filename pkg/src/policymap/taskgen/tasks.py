"""Task specifications: the saliency reach task and the five 1-in-5 suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..worldsim import ObjectInstance, ObjectType
from .catalog import Catalog

DEFAULT_BEARINGS = (-36.0, -18.0, 0.0, 18.0, 36.0)
DEFAULT_D_MEAN = 5.0
DEFAULT_D_JIT = 1.0
DEFAULT_MAX_STEPS = 200
DEFAULT_REWARD = 1.0

N_SUITE_TASKS = 5
TYPES_PER_TASK = 5


@dataclass
class TaskSpec:
    id: int
    mode: str  # rgb | saliency
    objects: list  # ObjectInstance templates (positions filled at reset)
    reward: float = DEFAULT_REWARD
    max_steps: int = DEFAULT_MAX_STEPS
    d_mean: float = DEFAULT_D_MEAN
    d_jit: float = DEFAULT_D_JIT
    bearings_deg: tuple = DEFAULT_BEARINGS
    type_indices: tuple = field(default=())  # catalog indices per object, bookkeeping

    def __post_init__(self):
        n_targets = sum(1 for o in self.objects if o.role == "target")
        if n_targets != 1:
            raise ValueError(f"task {self.id}: expected exactly one target, got {n_targets}")
        if self.mode not in ("rgb", "saliency"):
            raise ValueError(f"task {self.id}: unknown mode {self.mode!r}")


def make_saliency_task(
    reward: float = DEFAULT_REWARD,
    max_steps: int = DEFAULT_MAX_STEPS,
    height: float = 1.2,
    width: float = 0.7,
) -> TaskSpec:
    """Single-object reach task observed as a binary saliency map."""
    obj = ObjectType(color=(0.5, 0.5, 0.5), height=height, width=width, reward=reward)
    return TaskSpec(
        id=-1,
        mode="saliency",
        objects=[ObjectInstance(type=obj, role="target")],
        reward=reward,
        max_steps=max_steps,
    )


def make_task_suite(catalog: Catalog, seed: int, reward: float = DEFAULT_REWARD,
                    max_steps: int = DEFAULT_MAX_STEPS) -> list[TaskSpec]:
    """Five 1-in-5 tasks over 25 catalog types sampled without replacement.

    Per task the five types take roles target, decoy, background x3; no type
    appears in more than one task.
    """
    n_needed = N_SUITE_TASKS * TYPES_PER_TASK
    if len(catalog) < n_needed:
        raise ValueError(f"catalog has {len(catalog)} types, need at least {n_needed}")
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(catalog))[:n_needed]
    roles = ["target", "decoy", "background", "background", "background"]
    tasks = []
    for t in range(N_SUITE_TASKS):
        idx = chosen[t * TYPES_PER_TASK : (t + 1) * TYPES_PER_TASK]
        objects = []
        for k, role in zip(idx, roles):
            entry = catalog[int(k)]
            base = entry.object_type
            obj_type = ObjectType(
                color=base.color,
                height=base.height,
                width=base.width,
                reward=reward if role == "target" else 0.0,
            )
            objects.append(ObjectInstance(type=obj_type, role=role))
        tasks.append(
            TaskSpec(
                id=t,
                mode="rgb",
                objects=objects,
                reward=reward,
                max_steps=max_steps,
                type_indices=tuple(int(k) for k in idx),
            )
        )
    return tasks


def save_task_suite(path, tasks: list[TaskSpec]) -> None:
    lines = ["# task suite", "version = 1", f"count = {len(tasks)}"]
    for task in tasks:
        lines.append(f"[task {task.id}]")
        lines.append(f"mode = {task.mode}")
        lines.append(f"reward = {task.reward!r}")
        lines.append(f"max_steps = {task.max_steps}")
        lines.append(f"d_mean = {task.d_mean!r}")
        lines.append(f"d_jit = {task.d_jit!r}")
        lines.append("bearings = " + " ".join(repr(b) for b in task.bearings_deg))
        lines.append("types = " + " ".join(str(i) for i in task.type_indices))
        for n, o in enumerate(task.objects):
            t = o.type
            lines.append(
                f"object {n} = {o.role} {t.color[0]!r} {t.color[1]!r} {t.color[2]!r} "
                f"{t.height!r} {t.width!r} {t.reward!r}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def load_task_suite(path) -> list[TaskSpec]:
    text = Path(path).read_text()
    tasks: list[TaskSpec] = []
    current: dict | None = None

    def flush():
        if current is not None:
            tasks.append(
                TaskSpec(
                    id=current["id"],
                    mode=current["mode"],
                    objects=current["objects"],
                    reward=current["reward"],
                    max_steps=current["max_steps"],
                    d_mean=current["d_mean"],
                    d_jit=current["d_jit"],
                    bearings_deg=tuple(current["bearings"]),
                    type_indices=tuple(current.get("types", ())),
                )
            )

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[task "):
            flush()
            current = {"id": int(line[6:-1]), "objects": []}
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if current is None:
            continue
        if key == "mode":
            current["mode"] = value
        elif key == "reward":
            current["reward"] = float(value)
        elif key == "max_steps":
            current["max_steps"] = int(value)
        elif key in ("d_mean", "d_jit"):
            current[key] = float(value)
        elif key == "bearings":
            current["bearings"] = [float(v) for v in value.split()]
        elif key == "types":
            current["types"] = [int(v) for v in value.split()]
        elif key.startswith("object"):
            parts = value.split()
            role = parts[0]
            c0, c1, c2, height, width, obj_reward = (float(v) for v in parts[1:7])
            current["objects"].append(
                ObjectInstance(
                    type=ObjectType(color=(c0, c1, c2), height=height, width=width, reward=obj_reward),
                    role=role,
                )
            )
    flush()
    return tasks
