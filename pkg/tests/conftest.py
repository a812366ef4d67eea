import math

import numpy as np
import pytest

from gestalt_probe import Raster
from gestalt_probe.synth import make_digit_set, make_segmented_set, make_symmetric_set


@pytest.fixture(scope="session")
def digits200():
    return make_digit_set(200, seed=7)


@pytest.fixture(scope="session")
def digits100():
    return make_digit_set(100, seed=11)


@pytest.fixture(scope="session")
def symmetric20():
    return make_symmetric_set(20, seed=3)


@pytest.fixture(scope="session")
def scenes10():
    return make_segmented_set(10, num_classes=10, seed=5)


def straight_stroke(length: int = 40, size: int = 48) -> Raster:
    """Horizontal 1-px stroke of the given pixel length (arc length = length)."""
    canvas = np.zeros((size, size), dtype=np.uint8)
    y = size // 2
    canvas[y, 3 : 3 + length + 1] = 255
    return Raster(canvas)


def arc_stroke(radius: float = 10.0, size: int = 32) -> Raster:
    """Rasterized quarter-circle arc, 1 px wide and 8-connected.

    Corner-cutting removes staircase doubling so a walk along the pixels
    measures close to the true arc length pi*r/2."""
    cx = cy = size // 2
    pts = []
    for t in np.linspace(0.0, math.pi / 2, 2000):
        x = int(round(cx + radius * math.cos(t)))
        y = int(round(cy - radius * math.sin(t)))
        if pts and (y, x) == pts[-1]:
            continue
        if len(pts) >= 2 and max(abs(y - pts[-2][0]), abs(x - pts[-2][1])) <= 1:
            pts.pop()
        pts.append((y, x))
    canvas = np.zeros((size, size), dtype=np.uint8)
    for y, x in pts:
        canvas[y, x] = 255
    return Raster(canvas)
