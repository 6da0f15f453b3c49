"""Column renderer: one ray per image column against cylinder objects.

Camera model: 90 degree horizontal field of view on an 84x84 image, planar
projection with focal length 42 px, horizon between rows 41 and 42.  Column
``x`` looks along ``tan(bearing) = (41.5 - x)/42`` (column 0 is the left
edge).  Each object is a vertical cylinder; the nearest intersection wins
the whole column and is drawn centered on the horizon with projected half
height ``(h/2) * focal / d`` where ``d`` is the hit distance along the view
axis.  RGB pixels blend the object color toward the sky/ground color by
``min(1, d/d_fade)``; saliency frames mark hit pixels with 1.0 and skip
fading.

The numba and numpy backends evaluate the same float64 expression sequence
elementwise and produce bit-identical frames.
"""

from __future__ import annotations

import math

import numpy as np

from ..accel import NUMBA_ENABLED

IMAGE_SIZE = 84
FOCAL = 42.0
HORIZON = 42  # first ground row
_T_MIN = 1e-9


def _column_tangents() -> np.ndarray:
    x = np.arange(IMAGE_SIZE, dtype=np.float64)
    return (41.5 - x) / FOCAL


_COL_TAN = _column_tangents()


# ---------------------------------------------------------------- numpy path


def _intersect_columns_numpy(px, py, heading, obj_xy, obj_r):
    """Nearest cylinder hit per column: returns (t_best, idx_best, hit)."""
    cos_t = math.cos(heading)
    sin_t = math.sin(heading)
    u = _COL_TAN
    dx = cos_t - u * sin_t
    dy = sin_t + u * cos_t
    mx = (obj_xy[:, 0] - px)[:, None]
    my = (obj_xy[:, 1] - py)[:, None]
    a = dx * dx + dy * dy
    b = dx[None, :] * mx + dy[None, :] * my
    c = mx * mx + my * my - (obj_r * obj_r)[:, None]
    disc = b * b - a[None, :] * c
    miss = disc < 0.0
    sq = np.sqrt(np.where(miss, 0.0, disc))
    t1 = (b - sq) / a[None, :]
    t2 = (b + sq) / a[None, :]
    t = np.where(t1 > _T_MIN, t1, t2)
    t = np.where(miss | (t <= _T_MIN), np.inf, t)
    idx = np.argmin(t, axis=0)
    t_best = t[idx, np.arange(IMAGE_SIZE)]
    return t_best, idx, np.isfinite(t_best)


def render_rgb_numpy(px, py, heading, obj_xy, obj_r, obj_h, obj_color, sky, ground, d_fade):
    out = np.empty((3, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
    for ch in range(3):
        out[ch, :HORIZON, :] = sky[ch]
        out[ch, HORIZON:, :] = ground[ch]
    if obj_xy.shape[0] == 0:
        return out
    t, idx, hit = _intersect_columns_numpy(px, py, heading, obj_xy, obj_r)
    if not hit.any():
        return out
    t_safe = np.where(hit, t, 1.0)
    hh = 0.5 * obj_h[idx] * FOCAL / t_safe
    y0 = np.ceil(41.5 - hh)
    y1 = np.floor(41.5 + hh)
    fade = np.minimum(t_safe / d_fade, 1.0)
    ys = np.arange(IMAGE_SIZE, dtype=np.float64)[:, None]
    mask = hit[None, :] & (ys >= y0[None, :]) & (ys <= y1[None, :])
    col_color = obj_color[idx]  # (84, 3)
    bg = np.empty((3, IMAGE_SIZE), dtype=np.float64)
    for ch in range(3):
        bg[ch, :HORIZON] = sky[ch]
        bg[ch, HORIZON:] = ground[ch]
    omf = 1.0 - fade
    for ch in range(3):
        val = col_color[None, :, ch] * omf[None, :] + bg[ch][:, None] * fade[None, :]
        out[ch][mask] = val[mask]
    return out


def render_saliency_numpy(px, py, heading, obj_xy, obj_r, obj_h):
    out = np.zeros((1, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
    if obj_xy.shape[0] == 0:
        return out
    t, idx, hit = _intersect_columns_numpy(px, py, heading, obj_xy, obj_r)
    if not hit.any():
        return out
    t_safe = np.where(hit, t, 1.0)
    hh = 0.5 * obj_h[idx] * FOCAL / t_safe
    y0 = np.ceil(41.5 - hh)
    y1 = np.floor(41.5 + hh)
    ys = np.arange(IMAGE_SIZE, dtype=np.float64)[:, None]
    mask = hit[None, :] & (ys >= y0[None, :]) & (ys <= y1[None, :])
    out[0][mask] = 1.0
    return out


# ---------------------------------------------------------------- numba path

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _render_rgb_jit(out, px, py, heading, obj_xy, obj_r, obj_h, obj_color, sky, ground, d_fade):
        n_obj = obj_xy.shape[0]
        cos_t = math.cos(heading)
        sin_t = math.sin(heading)
        for ch in range(3):
            for y in range(HORIZON):
                for x in range(IMAGE_SIZE):
                    out[ch, y, x] = sky[ch]
            for y in range(HORIZON, IMAGE_SIZE):
                for x in range(IMAGE_SIZE):
                    out[ch, y, x] = ground[ch]
        for x in range(IMAGE_SIZE):
            u = (41.5 - x) / FOCAL
            dx = cos_t - u * sin_t
            dy = sin_t + u * cos_t
            a = dx * dx + dy * dy
            t_best = np.inf
            i_best = -1
            for i in range(n_obj):
                mx = obj_xy[i, 0] - px
                my = obj_xy[i, 1] - py
                b = dx * mx + dy * my
                c = mx * mx + my * my - obj_r[i] * obj_r[i]
                disc = b * b - a * c
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                t = (b - sq) / a
                if t <= _T_MIN:
                    t = (b + sq) / a
                if t <= _T_MIN:
                    continue
                if t < t_best:
                    t_best = t
                    i_best = i
            if i_best < 0:
                continue
            hh = 0.5 * obj_h[i_best] * FOCAL / t_best
            y0 = int(math.ceil(41.5 - hh))
            y1 = int(math.floor(41.5 + hh))
            if y0 < 0:
                y0 = 0
            if y1 > IMAGE_SIZE - 1:
                y1 = IMAGE_SIZE - 1
            fade = t_best / d_fade
            if fade > 1.0:
                fade = 1.0
            omf = 1.0 - fade
            for ch in range(3):
                oc = obj_color[i_best, ch] * omf
                for y in range(y0, y1 + 1):
                    bgc = sky[ch] if y < HORIZON else ground[ch]
                    out[ch, y, x] = oc + bgc * fade

    @njit(cache=True)
    def _render_saliency_jit(out, px, py, heading, obj_xy, obj_r, obj_h):
        n_obj = obj_xy.shape[0]
        cos_t = math.cos(heading)
        sin_t = math.sin(heading)
        for y in range(IMAGE_SIZE):
            for x in range(IMAGE_SIZE):
                out[0, y, x] = 0.0
        for x in range(IMAGE_SIZE):
            u = (41.5 - x) / FOCAL
            dx = cos_t - u * sin_t
            dy = sin_t + u * cos_t
            a = dx * dx + dy * dy
            t_best = np.inf
            i_best = -1
            for i in range(n_obj):
                mx = obj_xy[i, 0] - px
                my = obj_xy[i, 1] - py
                b = dx * mx + dy * my
                c = mx * mx + my * my - obj_r[i] * obj_r[i]
                disc = b * b - a * c
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                t = (b - sq) / a
                if t <= _T_MIN:
                    t = (b + sq) / a
                if t <= _T_MIN:
                    continue
                if t < t_best:
                    t_best = t
                    i_best = i
            if i_best < 0:
                continue
            hh = 0.5 * obj_h[i_best] * FOCAL / t_best
            y0 = int(math.ceil(41.5 - hh))
            y1 = int(math.floor(41.5 + hh))
            if y0 < 0:
                y0 = 0
            if y1 > IMAGE_SIZE - 1:
                y1 = IMAGE_SIZE - 1
            for y in range(y0, y1 + 1):
                out[0, y, x] = 1.0

    def render_rgb_numba(px, py, heading, obj_xy, obj_r, obj_h, obj_color, sky, ground, d_fade):
        out = np.empty((3, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
        _render_rgb_jit(out, px, py, heading, obj_xy, obj_r, obj_h, obj_color, sky, ground, d_fade)
        return out

    def render_saliency_numba(px, py, heading, obj_xy, obj_r, obj_h):
        out = np.empty((1, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
        _render_saliency_jit(out, px, py, heading, obj_xy, obj_r, obj_h)
        return out


# ------------------------------------------------------------------ dispatch

if NUMBA_ENABLED:
    render_rgb = render_rgb_numba
    render_saliency = render_saliency_numba
else:
    render_rgb = render_rgb_numpy
    render_saliency = render_saliency_numpy


def write_ppm(path, frame: np.ndarray) -> None:
    """Dump an rgb frame (3,84,84) in [0,1] as binary PPM (P6, 8-bit)."""
    if frame.shape != (3, IMAGE_SIZE, IMAGE_SIZE):
        raise ValueError(f"expected (3,{IMAGE_SIZE},{IMAGE_SIZE}) rgb frame, got {frame.shape}")
    rgb8 = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    header = f"P6\n{IMAGE_SIZE} {IMAGE_SIZE}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(rgb8.transpose(1, 2, 0).tobytes())
