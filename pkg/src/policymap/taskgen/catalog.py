"""Object catalog: 27 types over a 3x3x3 partition of RGB space."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..worldsim import ObjectType

N_TYPES = 27
HEIGHT_RANGE = (0.8, 1.6)
WIDTH_RANGE = (0.4, 1.0)


def color_region(type_index: int) -> tuple[int, int, int]:
    """Axis bin (r, g, b) of a type; each axis splits [0,1] into thirds."""
    if not 0 <= type_index < N_TYPES:
        raise ValueError(f"type index {type_index} out of range 0..{N_TYPES - 1}")
    return (type_index % 3, (type_index // 3) % 3, type_index // 9)


def region_of_color(rgb) -> int:
    """Inverse lookup: the unique type index whose region contains ``rgb``."""
    bins = [min(int(c * 3.0), 2) for c in rgb]
    return bins[0] + 3 * bins[1] + 9 * bins[2]


def sample_color_in_region(type_index: int, rng: np.random.Generator) -> tuple:
    r, g, b = color_region(type_index)
    lo = np.array([r, g, b], dtype=np.float64) / 3.0
    return tuple(float(v) for v in rng.uniform(lo, lo + 1.0 / 3.0))


@dataclass
class CatalogEntry:
    index: int
    region: tuple[int, int, int]
    object_type: ObjectType  # canonical color/size used in episode tasks


@dataclass
class Catalog:
    seed: int
    entries: list[CatalogEntry]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> CatalogEntry:
        return self.entries[i]


def make_catalog(seed: int) -> Catalog:
    """27 object types; per type a canonical in-region color and a base size."""
    rng = np.random.default_rng(seed)
    entries = []
    for k in range(N_TYPES):
        color = sample_color_in_region(k, rng)
        height = float(rng.uniform(*HEIGHT_RANGE))
        width = float(rng.uniform(*WIDTH_RANGE))
        entries.append(
            CatalogEntry(
                index=k,
                region=color_region(k),
                object_type=ObjectType(color=color, height=height, width=width),
            )
        )
    return Catalog(seed=seed, entries=entries)


def save_catalog(path, catalog: Catalog) -> None:
    lines = ["# object catalog", "version = 1", f"seed = {catalog.seed}", f"count = {len(catalog)}"]
    for e in catalog.entries:
        t = e.object_type
        lines.append(f"[type {e.index}]")
        lines.append(f"region = {e.region[0]} {e.region[1]} {e.region[2]}")
        lines.append(f"color = {t.color[0]!r} {t.color[1]!r} {t.color[2]!r}")
        lines.append(f"height = {t.height!r}")
        lines.append(f"width = {t.width!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_catalog(path) -> Catalog:
    text = Path(path).read_text()
    seed = 0
    entries: list[CatalogEntry] = []
    current: dict | None = None

    def flush():
        if current is not None:
            entries.append(
                CatalogEntry(
                    index=current["index"],
                    region=tuple(current["region"]),
                    object_type=ObjectType(
                        color=tuple(current["color"]),
                        height=current["height"],
                        width=current["width"],
                    ),
                )
            )

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[type "):
            flush()
            current = {"index": int(line[6:-1])}
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if current is None:
            if key == "seed":
                seed = int(value)
            continue
        if key == "region":
            current["region"] = [int(v) for v in value.split()]
        elif key == "color":
            current["color"] = [float(v) for v in value.split()]
        elif key in ("height", "width"):
            current[key] = float(value)
    flush()
    entries.sort(key=lambda e: e.index)
    return Catalog(seed=seed, entries=entries)
