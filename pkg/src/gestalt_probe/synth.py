"""Deterministic synthetic datasets for hermetic runs and tests.

Provides seven-segment style digit rasters (an MNIST stand-in when the real
archives are unavailable), mirror/point-symmetric shape pairs, and segmented
multi-class scenes.
"""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .engine import Item, ValidationSet
from .perturb import SegmentedImage
from .raster import Mask, Raster

# seven-segment encoding: segments A top, B top-right, C bottom-right,
# D bottom, E bottom-left, F top-left, G middle
_SEGMENTS = {
    0: "ABCDEF",
    1: "BC",
    2: "ABGED",
    3: "ABGCD",
    4: "FGBC",
    5: "AFGCD",
    6: "AFGECD",
    7: "ABC",
    8: "ABCDEFG",
    9: "ABCFGD",
}


def _segment_coords(x0, y0, w, h):
    x1, y1 = x0 + w, y0 + h
    ym = y0 + h / 2
    return {
        "A": (x0, y0, x1, y0),
        "B": (x1, y0, x1, ym),
        "C": (x1, ym, x1, y1),
        "D": (x0, y1, x1, y1),
        "E": (x0, ym, x0, y1),
        "F": (x0, y0, x0, ym),
        "G": (x0, ym, x1, ym),
    }


def render_digit(
    digit: int, rng: np.random.Generator, size: int = 28, stroke: int = 3
) -> np.ndarray:
    """One jittered seven-segment digit on a black background."""
    img = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(img)
    w = size * 0.38
    h = size * 0.62
    x0 = (size - w) / 2 + rng.uniform(-2.5, 2.5)
    y0 = (size - h) / 2 + rng.uniform(-2.5, 2.5)
    coords = _segment_coords(x0, y0, w, h)
    for seg in _SEGMENTS[digit]:
        ax, ay, bx, by = coords[seg]
        jitter = rng.uniform(-0.8, 0.8, size=4)
        draw.line(
            (ax + jitter[0], ay + jitter[1], bx + jitter[2], by + jitter[3]),
            fill=int(rng.integers(200, 256)),
            width=stroke,
        )
    return np.asarray(img)


def make_digit_set(n: int, seed: int, size: int = 28) -> ValidationSet:
    """n jittered digits cycling through the 10 classes."""
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        d = i % 10
        items.append(Item(Raster(render_digit(d, rng, size)), d))
    return ValidationSet(tuple(items), class_count=10)


def digit_arrays(n: int, seed: int, size: int = 28):
    """(images, labels) arrays in IDX-ready layout."""
    vset = make_digit_set(n, seed, size)
    images = np.stack([it.image.pixels for it in vset.items])
    labels = np.array([it.label for it in vset.items], dtype=np.uint8)
    return images, labels


def make_symmetric_shape(
    cls: int, rng: np.random.Generator, size: int = 64
) -> Raster:
    """A mirror-symmetric pair of filled rectangles.

    Each part is an axis-aligned rectangle, so it is also point-symmetric
    about its own centroid: rotating the parts by 180 degrees reproduces the
    shape. The class controls the rectangle geometry.
    """
    canvas = np.zeros((size, size), dtype=np.uint8)
    cx = size // 2
    yc = size // 2 + int(rng.integers(-2, 3))
    # each part is a Z of two blocks: point-symmetric about its own center
    # (so 180-degree part rotation restores the shape) but not up-down
    # symmetric (so the vertical mirror axis wins detection). Classes come in
    # pairs that are 90-degree rotations of each other, so near-90 part
    # rotations confuse a template classifier.
    # geometry: (part-center offset, block w, block h, in-part dx, in-part dy)
    geoms = [(15, 8, 10, 5, 7), (15, 10, 8, 7, 5), (15, 5, 7, 3, 9), (15, 7, 5, 9, 3)]
    gap, bw, bh, dx, dy = geoms[cls % len(geoms)]

    def block(xc, yb):
        x0, y0 = xc - bw // 2, yb - bh // 2
        canvas[max(y0, 0) : y0 + bh, max(x0, 0) : x0 + bw] = 230

    for side in (-1, 1):
        # mirror the in-part offset so the two parts reflect across the axis
        xc = cx + side * gap
        block(xc - side * dx, yc - dy)
        block(xc + side * dx, yc + dy)
    return Raster(canvas)


def make_symmetric_set(n: int, seed: int, classes: int = 4, size: int = 64) -> ValidationSet:
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        c = i % classes
        items.append(Item(make_symmetric_shape(c, rng, size), c))
    return ValidationSet(tuple(items), class_count=classes)


def make_segmented_scene(
    num_classes: int,
    target_class: int,
    rng: np.random.Generator,
    size: int = 96,
    background: int = 60,
) -> SegmentedImage:
    """RGB scene of disjoint colored rectangles, one per class, on a flat
    background. Region areas shrink with the class id so largest-area
    ordering is unambiguous."""
    canvas = np.full((size, size, 3), background, dtype=np.uint8)
    cols = int(np.ceil(np.sqrt(num_classes)))
    cell = size // cols
    masks = []
    for cid in range(num_classes):
        r, c = divmod(cid, cols)
        side = max(4, int(cell * 0.8) - 2 * cid)
        y0 = r * cell + int(rng.integers(0, max(1, cell - side)))
        x0 = c * cell + int(rng.integers(0, max(1, cell - side)))
        color = np.array(
            [
                60 + ((cid + 1) * 53) % 196,
                60 + ((cid + 1) * 97) % 196,
                60 + ((cid + 1) * 151) % 196,
            ],
            dtype=np.uint8,
        )
        bits = np.zeros((size, size), dtype=bool)
        bits[y0 : y0 + side, x0 : x0 + side] = True
        canvas[bits] = color
        masks.append((cid, Mask(bits)))
    return SegmentedImage(Raster(canvas), tuple(masks), target_class)


def make_segmented_set(
    n: int, num_classes: int, seed: int, size: int = 96
) -> ValidationSet:
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        target = i % num_classes
        seg = make_segmented_scene(num_classes, target, rng, size)
        items.append(Item(seg.raster, target, seg))
    return ValidationSet(tuple(items), class_count=num_classes)
