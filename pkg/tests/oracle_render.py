"""Brute-force reference renderer used as the test oracle.

Independently written from the production kernels: plain Python scalar math,
one ray per column against every cylinder, explicit per-pixel fills.  Slow
and simple on purpose.
"""

import math

import numpy as np

IMAGE = 84
FOCAL = 42.0
HORIZON = 42
T_MIN = 1e-9


def oracle_render(px, py, heading, objects, sky, ground, d_fade, mode="rgb"):
    """objects: list of dicts with x, y, radius, height, color (rgb tuple)."""
    if mode == "rgb":
        out = np.empty((3, IMAGE, IMAGE), dtype=np.float32)
        for ch in range(3):
            for y in range(IMAGE):
                out[ch, y, :] = sky[ch] if y < HORIZON else ground[ch]
    else:
        out = np.zeros((1, IMAGE, IMAGE), dtype=np.float32)

    cos_t = math.cos(heading)
    sin_t = math.sin(heading)
    for x in range(IMAGE):
        u = (41.5 - x) / FOCAL
        dx = cos_t - u * sin_t
        dy = sin_t + u * cos_t
        a = dx * dx + dy * dy
        best_t = math.inf
        best = None
        for obj in objects:
            mx = obj["x"] - px
            my = obj["y"] - py
            b = dx * mx + dy * my
            c = mx * mx + my * my - obj["radius"] * obj["radius"]
            disc = b * b - a * c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            t = (b - sq) / a
            if t <= T_MIN:
                t = (b + sq) / a
            if t <= T_MIN:
                continue
            if t < best_t:
                best_t = t
                best = obj
        if best is None:
            continue
        hh = 0.5 * best["height"] * FOCAL / best_t
        y0 = max(0, int(math.ceil(41.5 - hh)))
        y1 = min(IMAGE - 1, int(math.floor(41.5 + hh)))
        if mode == "saliency":
            for y in range(y0, y1 + 1):
                out[0, y, x] = 1.0
            continue
        fade = min(best_t / d_fade, 1.0)
        omf = 1.0 - fade
        for ch in range(3):
            oc = best["color"][ch] * omf
            for y in range(y0, y1 + 1):
                bgc = sky[ch] if y < HORIZON else ground[ch]
                out[ch, y, x] = oc + bgc * fade
    return out


def random_scene(rng, max_objects=3):
    """A random camera pose plus up to ``max_objects`` cylinders."""
    n = int(rng.integers(0, max_objects + 1))
    objects = []
    for _ in range(n):
        objects.append({
            "x": float(rng.uniform(-8.0, 8.0)),
            "y": float(rng.uniform(-8.0, 8.0)),
            "radius": float(rng.uniform(0.1, 1.2)),
            "height": float(rng.uniform(0.3, 2.5)),
            "color": tuple(rng.random(3)),
        })
    pose = (
        float(rng.uniform(-2.0, 2.0)),
        float(rng.uniform(-2.0, 2.0)),
        float(rng.uniform(0.0, 2.0 * math.pi)),
    )
    return pose, objects


def scene_arrays(objects):
    n = len(objects)
    xy = np.array([[o["x"], o["y"]] for o in objects], dtype=np.float64).reshape(n, 2)
    radius = np.array([o["radius"] for o in objects], dtype=np.float64)
    height = np.array([o["height"] for o in objects], dtype=np.float64)
    color = np.array([o["color"] for o in objects], dtype=np.float64).reshape(n, 3)
    return xy, radius, height, color
