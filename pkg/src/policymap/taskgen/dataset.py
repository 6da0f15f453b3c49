"""Offline classification dataset: single rendered objects, one label per type."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..worldsim import render
from ..worldsim.world import EnvParams
from .catalog import Catalog, sample_color_in_region

TRAIN_PER_CLASS = 500
TEST_PER_CLASS = 100

BEARING_RANGE_DEG = (-36.0, 36.0)
DISTANCE_RANGE = (2.5, 7.5)
SCALE_RANGE = (0.5, 1.5)
MIN_OBJECT_PIXELS = 20
_MAX_RESAMPLES = 100


@dataclass
class LabeledImages:
    """Image stack (N,3,84,84) float32 with integer labels 0..26."""

    images: np.ndarray
    labels: np.ndarray
    stream_id: int  # entropy id of the RNG stream that produced this split


def _render_single_object(entry, rng: np.random.Generator, env: EnvParams):
    """One scene with one object at a random in-view bearing/distance.

    Resamples until the object covers at least MIN_OBJECT_PIXELS pixels.
    Returns (rgb frame, object pixel count).
    """
    for _ in range(_MAX_RESAMPLES):
        bearing = np.deg2rad(rng.uniform(*BEARING_RANGE_DEG))
        dist = rng.uniform(*DISTANCE_RANGE)
        scale = rng.uniform(*SCALE_RANGE)
        color = sample_color_in_region(entry.index, rng)
        height = entry.object_type.height * scale
        width = entry.object_type.width * scale
        xy = np.array([[dist * np.cos(bearing), dist * np.sin(bearing)]])
        radius = np.array([width * 0.5])
        heights = np.array([height])
        sal = render.render_saliency(0.0, 0.0, 0.0, xy, radius, heights)
        n_pixels = int(sal.sum())
        if n_pixels < MIN_OBJECT_PIXELS:
            continue
        rgb = render.render_rgb(
            0.0, 0.0, 0.0, xy, radius, heights,
            np.array([color]), np.asarray(env.sky, dtype=np.float64),
            np.asarray(env.ground, dtype=np.float64), env.d_fade,
        )
        return rgb, n_pixels
    raise RuntimeError(f"could not render a visible object of type {entry.index}")


def _generate_split(catalog: Catalog, rng: np.random.Generator, per_class: int,
                    env: EnvParams, stream_id: int) -> LabeledImages:
    n = per_class * len(catalog)
    images = np.empty((n, 3, render.IMAGE_SIZE, render.IMAGE_SIZE), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    i = 0
    for entry in catalog.entries:
        for _ in range(per_class):
            images[i], _ = _render_single_object(entry, rng, env)
            labels[i] = entry.index
            i += 1
    return LabeledImages(images=images, labels=labels, stream_id=stream_id)


def gen_classification_dataset(
    catalog: Catalog,
    seed: int,
    train_per_class: int = TRAIN_PER_CLASS,
    test_per_class: int = TEST_PER_CLASS,
    env: EnvParams | None = None,
):
    """Train/test image sets from disjoint RNG streams of ``seed``."""
    env = env or EnvParams()
    train_ss, test_ss = np.random.SeedSequence(seed).spawn(2)
    train = _generate_split(
        catalog, np.random.default_rng(train_ss), train_per_class, env, train_ss.spawn_key[-1]
    )
    test = _generate_split(
        catalog, np.random.default_rng(test_ss), test_per_class, env, test_ss.spawn_key[-1]
    )
    return train, test


# ------------------------------------------------------------- RWDS file i/o

_MAGIC = b"RWDS"
_VERSION = 1


def save_dataset(path, split: LabeledImages) -> None:
    n, c, h, w = split.images.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIBHH", _VERSION, n, c, h, w))
        for i in range(n):
            fh.write(struct.pack("<B", int(split.labels[i])))
            fh.write(np.ascontiguousarray(split.images[i], dtype="<f4").tobytes())


def load_dataset(path) -> LabeledImages:
    buf = Path(path).read_bytes()
    if buf[:4] != _MAGIC:
        raise ValueError(f"{path}: bad magic {buf[:4]!r}, expected {_MAGIC!r}")
    version, n, c, h, w = struct.unpack_from("<IIBHH", buf, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported dataset version {version}")
    off = 4 + struct.calcsize("<IIBHH")
    images = np.empty((n, c, h, w), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    frame_bytes = c * h * w * 4
    for i in range(n):
        labels[i] = buf[off]
        off += 1
        images[i] = np.frombuffer(buf, dtype="<f4", count=c * h * w, offset=off).reshape(c, h, w)
        off += frame_bytes
    return LabeledImages(images=images, labels=labels, stream_id=-1)
