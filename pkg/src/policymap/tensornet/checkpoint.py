"""Binary checkpoint format.

Layout (all integers little-endian):

    magic   4 bytes  b"RWCK"
    version u32      1
    count   u32      number of tensors
    per tensor:
        name_len u16, name UTF-8, rank u8, extents u32 * rank,
        payload  float32 little-endian, C order

Round-trips are bit-exact; only float32 tensors are accepted.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"RWCK"
VERSION = 1


def save_checkpoint(path, tensors: dict[str, np.ndarray]) -> None:
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        if arr.dtype != np.float32:
            raise TypeError(f"checkpoint tensors must be float32, {name!r} is {arr.dtype}")
        nbytes = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nbytes)))
        parts.append(nbytes)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {buf[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = 12
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = buf[off : off + name_len].decode("utf-8")
        off += name_len
        (rank,) = struct.unpack_from("<B", buf, off)
        off += 1
        shape = struct.unpack_from(f"<{rank}I", buf, off)
        off += 4 * rank
        n = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(buf, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        tensors[name] = arr.astype(np.float32, copy=True)
    return tensors
