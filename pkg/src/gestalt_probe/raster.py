"""Pixel containers, geometry, color math, and morphology primitives.

All operations are pure: they never mutate their inputs and return fresh
arrays, so values are freely shareable across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ChannelMismatchError,
    DimensionMismatchError,
    EmptyInputError,
    GestaltError,
)


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Raster:
    """A width x height x channels grid of 8-bit samples.

    ``pixels`` is (height, width) for grayscale or (height, width, 3) for RGB,
    dtype uint8, row-major.
    """

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.dtype != np.uint8:
            raise GestaltError(f"raster samples must be uint8, got {p.dtype}")
        if p.ndim == 3 and p.shape[2] == 1:
            p = p[:, :, 0]
        if p.ndim not in (2, 3) or (p.ndim == 3 and p.shape[2] != 3):
            raise GestaltError(f"raster shape must be (h,w) or (h,w,3), got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise GestaltError("raster must be at least 1x1")
        object.__setattr__(self, "pixels", np.ascontiguousarray(p))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def same_content(self, other: "Raster") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class Mask:
    """Boolean foreground map aligned with a Raster."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.dtype != bool:
            raise GestaltError("mask must be a 2-D boolean array")
        object.__setattr__(self, "bits", np.ascontiguousarray(self.bits))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def binarize(img: Raster, threshold: int) -> Mask:
    """Mask of pixels with value >= threshold. Grayscale input only."""
    if img.channels != 1:
        raise ChannelMismatchError(
            f"binarize needs a single-channel image, got {img.channels} channels"
        )
    return Mask(img.pixels >= threshold)


def _neighbors(bits: np.ndarray):
    """The 8 neighbor planes P2..P9 (N, NE, E, SE, S, SW, W, NW), zero-padded."""
    padded = np.pad(bits, 1, mode="constant").astype(np.uint8)
    n = padded[:-2, 1:-1]
    ne = padded[:-2, 2:]
    e = padded[1:-1, 2:]
    se = padded[2:, 2:]
    s = padded[2:, 1:-1]
    sw = padded[2:, :-2]
    w = padded[1:-1, :-2]
    nw = padded[:-2, :-2]
    return n, ne, e, se, s, sw, w, nw


def _transitions(planes) -> np.ndarray:
    """Number of 0->1 transitions in the circular neighbor sequence."""
    seq = list(planes) + [planes[0]]
    t = np.zeros(planes[0].shape, dtype=np.uint8)
    for a, b in zip(seq, seq[1:]):
        t += (a == 0) & (b == 1)
    return t


def skeletonize(mask: Mask) -> Mask:
    """Two-subpass morphological thinning to a 1-pixel-wide skeleton.

    Keeps the skeleton inside the input foreground and preserves the number
    of 8-connected components. A cleanup pass removes residual 2x2 blocks
    the two subpasses can leave behind on staircase boundaries.
    """
    if mask.count == 0:
        raise EmptyInputError("skeletonize: mask has no foreground pixels")
    bits = mask.bits.copy()
    while True:
        changed = False
        for subpass in (0, 1):
            planes = _neighbors(bits)
            p2, p3, p4, p5, p6, p7, p8, p9 = planes
            b = sum(p.astype(np.uint16) for p in planes)
            a = _transitions(planes)
            cond = bits & (b >= 2) & (b <= 6) & (a == 1)
            if subpass == 0:
                cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            if cond.any():
                bits[cond] = False
                changed = True
        if not changed:
            break
    _break_square_blocks(bits)
    return Mask(bits)


def _break_square_blocks(bits: np.ndarray) -> None:
    """Remove one simple pixel from every remaining 2x2 foreground block."""
    h, w = bits.shape
    while True:
        blocks = bits[:-1, :-1] & bits[1:, :-1] & bits[:-1, 1:] & bits[1:, 1:]
        ys, xs = np.nonzero(blocks)
        if len(ys) == 0:
            return
        removed = False
        for y, x in zip(ys, xs):
            for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1)):
                py, px = y + dy, x + dx
                if not bits[py, px]:
                    continue
                patch = np.zeros((3, 3), dtype=bool)
                y0, x0 = max(py - 1, 0), max(px - 1, 0)
                y1, x1 = min(py + 2, h), min(px + 2, w)
                patch[y0 - py + 1 : y1 - py + 1, x0 - px + 1 : x1 - px + 1] = bits[
                    y0:y1, x0:x1
                ]
                patch[1, 1] = False
                ring = patch[
                    [0, 0, 1, 2, 2, 2, 1, 0], [1, 2, 2, 2, 1, 0, 0, 0]
                ].astype(np.uint8)
                trans = int(((ring == 0) & (np.roll(ring, -1) == 1)).sum())
                if trans == 1 and ring.sum() >= 2:
                    bits[py, px] = False
                    removed = True
                    break
            if removed:
                break
        if not removed:
            return


def _bilinear_sample(
    pixels: np.ndarray, sx: np.ndarray, sy: np.ndarray, fill
) -> np.ndarray:
    """Sample ``pixels`` at continuous coordinates, filling out-of-bounds."""
    h, w = pixels.shape[:2]
    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    cx = np.clip(sx, 0, w - 1)
    cy = np.clip(sy, 0, h - 1)
    x0 = np.floor(cx).astype(np.intp)
    y0 = np.floor(cy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = cx - x0
    fy = cy - y0
    vals = pixels.astype(np.float64)
    if pixels.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
        inside_b = inside[..., None]
    else:
        inside_b = inside
    top = vals[y0, x0] * (1 - fx) + vals[y0, x1] * fx
    bot = vals[y1, x0] * (1 - fx) + vals[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    fill_arr = np.asarray(fill, dtype=np.float64)
    out = np.where(inside_b, out, fill_arr)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def default_fill(img: Raster):
    """Background value for out-of-bounds samples: 0 for grayscale, image mean for RGB."""
    if img.channels == 1:
        return 0.0
    return np.rint(img.pixels.reshape(-1, 3).mean(axis=0))


def warp(img: Raster, displacement: np.ndarray, fill=None) -> Raster:
    """Inverse-mapped bilinear resampling along a per-pixel displacement field.

    ``displacement`` is (h, w, 2) storing (u, v): the output pixel at (x, y)
    takes its value from source position (x + u, y + v). A zero field returns
    a pixel-identical copy.
    """
    if displacement.shape != (img.height, img.width, 2):
        raise DimensionMismatchError(
            f"displacement shape {displacement.shape} does not match image "
            f"{(img.height, img.width, 2)}"
        )
    if fill is None:
        fill = default_fill(img)
    ys, xs = np.mgrid[0 : img.height, 0 : img.width]
    sx = xs + displacement[:, :, 0]
    sy = ys + displacement[:, :, 1]
    return Raster(_bilinear_sample(img.pixels, sx, sy, fill))


def _rgb_to_hsv(rgb: np.ndarray):
    """Vectorized RGB [0,1] -> (h in degrees, s, v)."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1), 0.0)
    h = np.zeros_like(maxc)
    nz = delta > 0
    d = np.where(nz, delta, 1.0)
    rc = (maxc - r) / d
    gc = (maxc - g) / d
    bc = (maxc - b) / d
    h = np.where(nz & (maxc == r), bc - gc, h)
    h = np.where(nz & (maxc == g) & (maxc != r), 2.0 + rc - bc, h)
    h = np.where(nz & (maxc == b) & (maxc != r) & (maxc != g), 4.0 + gc - rc, h)
    return (h * 60.0) % 360.0, s, v


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    hh = (h % 360.0) / 60.0
    i = np.floor(hh).astype(np.int64) % 6
    f = hh - np.floor(hh)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def hue_rotate(img: Raster, mask: Mask, angle: float) -> Raster:
    """Shift the hue of masked pixels by ``angle`` degrees on the color wheel.

    Saturation and value are preserved; pixels outside the mask are
    bit-identical to the input. angle 0 is a bit-exact identity.
    """
    if img.channels != 3:
        raise ChannelMismatchError("hue_rotate needs a 3-channel image")
    if (mask.height, mask.width) != (img.height, img.width):
        raise DimensionMismatchError("mask dimensions do not match image")
    out = img.pixels.copy()
    if angle % 360.0 == 0:
        return Raster(out)
    sel = mask.bits
    rgb = img.pixels[sel].astype(np.float64) / 255.0
    h, s, v = _rgb_to_hsv(rgb)
    rotated = _hsv_to_rgb(h + angle, s, v)
    out[sel] = np.clip(np.rint(rotated * 255.0), 0, 255).astype(np.uint8)
    return Raster(out)


def rotation_matrix(theta_deg: float) -> np.ndarray:
    """The 2x2 patch-rotation matrix [[cos, sin], [-sin, cos]]."""
    t = math.radians(theta_deg)
    return np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])


def rotate_patch(
    img: Raster, region: Mask, center: Point, theta: float, fill=None
) -> Raster:
    """Resample the pixels of ``region`` through a rotation about ``center``.

    Output pixel x takes the value at center + R(theta) (x - center) whenever
    that source position falls inside the region; all other pixels are left
    unchanged. theta=0 is a bit-exact identity.
    """
    if (region.height, region.width) != (img.height, img.width):
        raise DimensionMismatchError("region dimensions do not match image")
    if not (0 <= center.x <= img.width - 1 and 0 <= center.y <= img.height - 1):
        raise GestaltError(f"rotation center {center} outside image bounds")
    if fill is None:
        fill = default_fill(img)
    rot = rotation_matrix(theta)
    ys, xs = np.mgrid[0 : img.height, 0 : img.width]
    dx = xs - center.x
    dy = ys - center.y
    sx = center.x + rot[0, 0] * dx + rot[0, 1] * dy
    sy = center.y + rot[1, 0] * dx + rot[1, 1] * dy
    # resample the region itself (its content rotates away) plus the rotated
    # footprint: destination pixels whose nearest source pixel is in the region
    nx = np.clip(np.rint(sx).astype(np.intp), 0, img.width - 1)
    ny = np.clip(np.rint(sy).astype(np.intp), 0, img.height - 1)
    in_bounds = (sx >= -0.5) & (sx <= img.width - 0.5) & (sy >= -0.5) & (sy <= img.height - 0.5)
    footprint = (in_bounds & region.bits[ny, nx]) | region.bits
    resampled = _bilinear_sample(img.pixels, sx, sy, fill)
    out = img.pixels.copy()
    out[footprint] = resampled[footprint]
    return Raster(out)
