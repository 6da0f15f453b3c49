"""First-person open-world environment with a column raycast renderer."""

from .render import FOCAL, HORIZON, IMAGE_SIZE, write_ppm
from .world import (
    N_ACTIONS,
    EnvParams,
    Frame,
    ObjectInstance,
    ObjectType,
    Pose,
    WorldState,
    bench_fps,
    column_hits,
    render_frame,
    world_reset,
    world_step,
)

__all__ = [
    "FOCAL",
    "HORIZON",
    "IMAGE_SIZE",
    "write_ppm",
    "N_ACTIONS",
    "EnvParams",
    "Frame",
    "ObjectInstance",
    "ObjectType",
    "Pose",
    "WorldState",
    "bench_fps",
    "column_hits",
    "render_frame",
    "world_reset",
    "world_step",
]
