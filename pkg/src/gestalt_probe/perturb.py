"""The six perturbation generators, one per Gestalt principle.

Each generator is a pure, seeded function of its inputs; identity parameters
(occlusion 0%, zero affine vector, hue angle 0, all classes kept, rotation 0)
return bit-identical rasters. Dotification has no identity parameter.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, EmptyInputError, GestaltError
from .raster import (
    Mask,
    Point,
    Raster,
    binarize,
    hue_rotate,
    rotate_patch,
    skeletonize,
    warp,
)


class Principle(enum.Enum):
    CLOSURE = "closure"
    PROXIMITY = "proximity"
    CONTINUATION = "continuation"
    SIMILARITY = "similarity"
    FIGURE_GROUND = "figure_ground"
    SYMMETRY = "symmetry"


@dataclass(frozen=True)
class GestaltParam:
    """A principle paired with its perturbation-strength parameter."""

    principle: Principle
    value: float | tuple

    def __post_init__(self):
        p, v = self.principle, self.value
        if p is Principle.CONTINUATION:
            if len(v) != 6 or not all(math.isfinite(x) for x in v):
                raise GestaltError("continuation parameter must be 6 finite values")
            object.__setattr__(self, "value", tuple(float(x) for x in v))
            return
        v = float(v)
        if p is Principle.CLOSURE and not 0 <= v <= 100:
            raise GestaltError(f"occlusion percentage {v} outside [0,100]")
        if p is Principle.PROXIMITY and not v > 0:
            raise GestaltError(f"point distance {v} must be positive")
        if p is Principle.SIMILARITY and not 0 <= v < 360:
            raise GestaltError(f"radial angle {v} outside [0,360)")
        if p is Principle.FIGURE_GROUND and (v != int(v) or v < 1):
            raise GestaltError(f"class count {v} must be an integer >= 1")
        if p is Principle.SYMMETRY and not 0 <= v <= 360:
            raise GestaltError(f"rotation angle {v} outside [0,360]")
        object.__setattr__(self, "value", v)

    def scalar(self) -> float:
        """Scalar magnitude used for axis ordering and tie-breaking."""
        if self.principle is Principle.CONTINUATION:
            return affine_distance(self.value, (128, 128))
        return float(self.value)


@dataclass(frozen=True)
class SegmentedImage:
    """Raster plus per-class segmentation masks and the class under test."""

    raster: Raster
    class_masks: tuple  # of (class_id, Mask)
    target_class: int

    def __post_init__(self):
        object.__setattr__(self, "class_masks", tuple(self.class_masks))
        ids = [cid for cid, _ in self.class_masks]
        if self.target_class not in ids:
            raise GestaltError(f"target class {self.target_class} not among masks {ids}")
        acc = np.zeros(
            (self.raster.height, self.raster.width), dtype=np.int32
        )
        for _, m in self.class_masks:
            acc += m.bits
        if (acc > 1).any():
            raise GestaltError("class masks overlap")

    def mask_for(self, class_id: int) -> Mask:
        for cid, m in self.class_masks:
            if cid == class_id:
                return m
        raise KeyError(class_id)


@dataclass(frozen=True)
class SymmetryAxis:
    center: Point
    orientation: float  # degrees, vertical axis = 90
    score: float
    part_a: Mask
    part_b: Mask


# --------------------------------------------------------------------------
# Closure: occlusion of a measured fraction of the foreground
# --------------------------------------------------------------------------

def occlude(
    img: Raster,
    pct: float,
    seed: int,
    threshold: int = 128,
    background: int = 0,
    max_patch: int = 4,
) -> Raster:
    """Hide ``pct`` percent of the binarized foreground with background patches.

    Seeded-random square patches are centered on still-visible foreground
    pixels; the patch side shrinks as the target is approached so the measured
    occluded fraction always lands within +/-1 percentage point of the request.
    """
    if not 0 <= pct <= 100:
        raise GestaltError(f"occlusion percentage {pct} outside [0,100]")
    fg = binarize(img, threshold).bits
    total = int(fg.sum())
    if total == 0:
        raise EmptyInputError("occlude: image has no foreground")
    out = img.pixels.copy()
    goal = int(round(pct / 100.0 * total))  # nearest achievable pixel count
    if goal == 0:
        return Raster(out)
    rng = np.random.default_rng(seed)
    remaining_mask = fg.copy()
    occluded = 0
    h, w = fg.shape
    attempts = 0
    budget = 10 * total
    while occluded < goal:
        if attempts >= budget:
            raise ConvergenceError(
                f"occlude: reached {100*occluded/total:.2f}% after {attempts} "
                f"attempts toward {pct}%",
                achieved=100 * occluded / total,
            )
        attempts += 1
        candidates = np.flatnonzero(remaining_mask)
        if len(candidates) == 0:
            break
        pick = int(candidates[rng.integers(len(candidates))])
        cy, cx = divmod(pick, w)
        side = int(min(max_patch, max(1, math.isqrt(goal - occluded))))
        y0 = max(cy - side // 2, 0)
        x0 = max(cx - side // 2, 0)
        y1 = min(y0 + side, h)
        x1 = min(x0 + side, w)
        newly = int(remaining_mask[y0:y1, x0:x1].sum())
        if occluded + newly > goal:
            continue
        out[y0:y1, x0:x1] = background
        remaining_mask[y0:y1, x0:x1] = False
        occluded += newly
    return Raster(out)


def occluded_fraction(original: Raster, perturbed: Raster, threshold: int = 128) -> float:
    """Fraction of the original foreground no longer above threshold."""
    before = binarize(original, threshold).bits
    after = binarize(perturbed, threshold).bits
    total = int(before.sum())
    if total == 0:
        raise EmptyInputError("no foreground in original")
    return int((before & ~after).sum()) / total


# --------------------------------------------------------------------------
# Proximity: skeleton dotification at a controlled geodesic spacing
# --------------------------------------------------------------------------

def _skeleton_segments(skel: np.ndarray) -> list[list[tuple[int, int]]]:
    """Split a skeleton into ordered pixel paths between junctions/endpoints."""
    pts = set(zip(*np.nonzero(skel)))

    def neighbors(p):
        y, x = p
        return [
            (y + dy, x + dx)
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dy, dx) != (0, 0) and (y + dy, x + dx) in pts
        ]

    ring = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]

    def branch_count(p):
        y, x = p
        vals = [1 if (y + dy, x + dx) in pts else 0 for dy, dx in ring]
        return sum(
            1 for i in range(8) if vals[i] == 0 and vals[(i + 1) % 8] == 1
        )

    # a junction is where three or more branches meet (crossing number);
    # raw neighbor counts misfire on diagonal staircase pixels
    junctions = {p for p in pts if branch_count(p) >= 3}
    path_pts = pts - junctions

    def path_nbrs(p):
        return [q for q in neighbors(p) if q in path_pts]

    # connected components of the junction-free skeleton
    unvisited = set(path_pts)
    segments = []
    while unvisited:
        seed = min(unvisited)
        comp = {seed}
        stack = [seed]
        while stack:
            p = stack.pop()
            for q in path_nbrs(p):
                if q not in comp:
                    comp.add(q)
                    stack.append(q)
        unvisited -= comp
        endpoints = sorted(p for p in comp if len(set(path_nbrs(p)) & comp) <= 1)
        start = endpoints[0] if endpoints else min(comp)  # loop has no endpoint
        path = [start]
        seen = {start}
        cur = start
        while True:
            nxt = [q for q in path_nbrs(cur) if q in comp and q not in seen]
            if not nxt:
                break
            # prefer 4-connected steps so the walk follows the curve smoothly
            nxt.sort(key=lambda q: (abs(q[0] - cur[0]) + abs(q[1] - cur[1]), q))
            cur = nxt[0]
            seen.add(cur)
            path.append(cur)
        segments.append(path)
    return segments


def _sample_segment(path, spacing: float, merge_radius: float):
    """Dot centers and arc positions for one path: regular samples every
    ``spacing`` along the arc, plus the far endpoint unless it falls within
    ``merge_radius`` of the last regular sample.

    Centers are continuous (y, x) positions interpolated along the pixel
    polyline, so consecutive geodesic gaps equal the spacing exactly."""
    arc = np.zeros(len(path))
    for i in range(1, len(path)):
        dy = path[i][0] - path[i - 1][0]
        dx = path[i][1] - path[i - 1][1]
        arc[i] = arc[i - 1] + math.hypot(dx, dy)
    length = float(arc[-1])
    targets = [k * spacing for k in range(int(length // spacing) + 1)]
    if length - targets[-1] > merge_radius:
        targets.append(length)
    out = []
    for t in targets:
        idx = int(np.searchsorted(arc, t, side="right"))
        if idx >= len(path):
            out.append((tuple(map(float, path[-1])), length))
            continue
        if idx == 0:
            out.append((tuple(map(float, path[0])), 0.0))
            continue
        span = arc[idx] - arc[idx - 1]
        frac = (t - arc[idx - 1]) / span if span > 0 else 0.0
        y = path[idx - 1][0] + frac * (path[idx][0] - path[idx - 1][0])
        x = path[idx - 1][1] + frac * (path[idx][1] - path[idx - 1][1])
        out.append(((y, x), float(t)))
    return out


def dotify(
    img: Raster,
    spacing: float,
    threshold: int = 128,
    dot_diameter: float = 2.0,
    dot_value: int = 255,
    background: int = 0,
) -> Raster:
    """Replace a shape with discs sampled along its skeleton at ``spacing`` px.

    The skeleton is split at junction pixels; each segment is resampled at
    geodesic arc-length intervals equal to ``spacing`` (measured along the
    curve), and both segment endpoints always receive a dot. The far endpoint
    is merged into the last regular sample when closer than the dot radius.
    """
    if spacing <= 0:
        raise GestaltError(f"spacing {spacing} must be positive")
    if img.channels != 1:
        raise GestaltError("dotify expects a single-channel shape image")
    skel = skeletonize(binarize(img, threshold)).bits
    segments = _skeleton_segments(skel)
    if not segments:
        raise EmptyInputError("dotify: skeleton is empty")
    centers = [
        px
        for path in segments
        for px, _ in _sample_segment(path, spacing, dot_diameter / 2.0)
    ]
    out = np.full_like(img.pixels, background)
    h, w = out.shape
    r = dot_diameter / 2.0
    for cy, cx in centers:
        y0, y1 = max(int(math.floor(cy - r)), 0), min(int(math.ceil(cy + r)) + 1, h)
        x0, x1 = max(int(math.floor(cx - r)), 0), min(int(math.ceil(cx + r)) + 1, w)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        out[y0:y1, x0:x1][disc] = dot_value
    return Raster(out)


def dot_centers(
    img: Raster, spacing: float, threshold: int = 128, dot_diameter: float = 2.0
):
    """Per-segment (pixel, arc-position) samples chosen by dotify, exposed so
    the spacing between consecutive dots can be measured along the curve."""
    skel = skeletonize(binarize(img, threshold)).bits
    segments = _skeleton_segments(skel)
    if not segments:
        raise EmptyInputError("dot_centers: skeleton is empty")
    return [_sample_segment(p, spacing, dot_diameter / 2.0) for p in segments]


# --------------------------------------------------------------------------
# Continuation: piecewise affine displacement over one image half
# --------------------------------------------------------------------------

LEFT_HALF = "left"
RIGHT_HALF = "right"


def half_mask(height: int, width: int, region: str) -> np.ndarray:
    xs = np.arange(width)
    if region == LEFT_HALF:
        cols = xs < width // 2
    elif region == RIGHT_HALF:
        cols = xs >= width // 2
    else:
        raise GestaltError(f"unknown region {region!r}")
    return np.broadcast_to(cols, (height, width)).copy()


def affine_field(
    da, height: int, width: int, region: str = RIGHT_HALF
) -> np.ndarray:
    """Per-pixel (u, v) displacement: affine in (x, y) inside the chosen half,
    zero elsewhere."""
    da = [float(x) for x in da]
    if len(da) != 6:
        raise GestaltError("affine parameter must have 6 entries")
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    u = da[0] + da[1] * xs + da[2] * ys
    v = da[3] + da[4] * xs + da[5] * ys
    sel = half_mask(height, width, region)
    fld = np.zeros((height, width, 2))
    fld[:, :, 0] = np.where(sel, u, 0.0)
    fld[:, :, 1] = np.where(sel, v, 0.0)
    return fld


def piecewise_affine(
    img: Raster, da, region: str = RIGHT_HALF, fill=None
) -> Raster:
    """Warp one half of the image along the affine displacement field."""
    fld = affine_field(da, img.height, img.width, region)
    return warp(img, fld, fill=fill)


def affine_distance(da, region_dims: tuple[int, int]) -> float:
    """Mean displacement magnitude over a (width, height) region, normalized
    by the region diagonal. Zero iff the parameter vector is zero."""
    w, h = region_dims
    if w < 1 or h < 1:
        raise GestaltError("region must be non-empty")
    da = [float(x) for x in da]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    u = da[0] + da[1] * xs + da[2] * ys
    v = da[3] + da[4] * xs + da[5] * ys
    diag = math.hypot(w, h)
    return float(np.hypot(u, v).mean() / diag)


# --------------------------------------------------------------------------
# Similarity: hue replacement of the segmented target object
# --------------------------------------------------------------------------

def recolor(seg: SegmentedImage, angle: float) -> Raster:
    """Rotate the hue of the target-class region by ``angle`` degrees."""
    return hue_rotate(seg.raster, seg.mask_for(seg.target_class), angle)


# --------------------------------------------------------------------------
# Figure/ground: reduce the number of surviving segmented classes
# --------------------------------------------------------------------------

def neutral_fill(seg: SegmentedImage):
    """Mean color of pixels outside every class mask; mid-gray fallback."""
    covered = np.zeros((seg.raster.height, seg.raster.width), dtype=bool)
    for _, m in seg.class_masks:
        covered |= m.bits
    bg = seg.raster.pixels[~covered]
    if bg.size == 0:
        return 128 if seg.raster.channels == 1 else np.array([128, 128, 128])
    if seg.raster.channels == 1:
        return int(round(float(bg.mean())))
    return np.rint(bg.reshape(-1, 3).mean(axis=0)).astype(np.uint8)


def reduce_classes(seg: SegmentedImage, keep_n: int) -> Raster:
    """Keep the target class plus the keep_n-1 largest other classes; paint
    every removed class region with a neutral fill."""
    n = len(seg.class_masks)
    if not 1 <= keep_n <= n:
        raise GestaltError(f"keep_n {keep_n} outside [1,{n}]")
    others = [
        (cid, m) for cid, m in seg.class_masks if cid != seg.target_class
    ]
    # largest area first; equal areas resolve to the lower class id
    others.sort(key=lambda cm: (-cm[1].count, cm[0]))
    keep_ids = {seg.target_class} | {cid for cid, _ in others[: keep_n - 1]}
    out = seg.raster.pixels.copy()
    fill = neutral_fill(seg)
    for cid, m in seg.class_masks:
        if cid not in keep_ids:
            out[m.bits] = fill
    return Raster(out)


# --------------------------------------------------------------------------
# Symmetry: mirror-axis detection and opposite part rotations
# --------------------------------------------------------------------------

def _gray(img: Raster) -> np.ndarray:
    if img.channels == 1:
        return img.pixels.astype(np.float64)
    return img.pixels.astype(np.float64).mean(axis=2)


def detect_symmetry(
    img: Raster, threshold: int = 1, step: float = 1.0
) -> SymmetryAxis:
    """Best mirror axis through the foreground centroid.

    Scans axis orientations on a grid (default 1 degree; a vertical axis is
    90) and scores each by the Pearson correlation between the image and its
    reflection about the axis. Ties and the degenerate uniform image resolve
    to the first grid orientation.
    """
    gray = _gray(img)
    fg = gray >= threshold
    if not fg.any():
        raise EmptyInputError("detect_symmetry: no foreground")
    ys, xs = np.nonzero(fg)
    cy, cx = float(ys.mean()), float(xs.mean())
    h, w = gray.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = xx - cx
    dy = yy - cy
    flat = gray.ravel()
    if flat.std() == 0:
        ang0 = 0.0
        return SymmetryAxis(
            Point(cx, cy), ang0, 1.0, *_split_parts(fg, cx, cy, ang0)
        )
    best = (-2.0, None)
    from .raster import _bilinear_sample  # reflection resampling

    for ang in np.arange(0.0, 180.0, step):
        t = math.radians(ang)
        nx, ny = math.cos(t), math.sin(t)
        dot = dx * nx + dy * ny
        rx = cx + 2 * dot * nx - dx
        ry = cy + 2 * dot * ny - dy
        refl = _bilinear_sample(gray.astype(np.uint8), rx, ry, 0.0).astype(np.float64)
        r = np.corrcoef(flat, refl.ravel())[0, 1]
        if not math.isfinite(r):
            r = 0.0
        if r > best[0] + 1e-12:
            best = (float(r), float(ang))
    score, ang = best
    return SymmetryAxis(Point(cx, cy), ang, score, *_split_parts(fg, cx, cy, ang))


def _split_parts(fg: np.ndarray, cx: float, cy: float, ang: float):
    """Foreground split into the two open half-planes beside the axis."""
    h, w = fg.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    t = math.radians(ang)
    # signed distance perpendicular to the axis direction
    side = -(xx - cx) * math.sin(t) + (yy - cy) * math.cos(t)
    part_a = Mask(fg & (side > 0))
    part_b = Mask(fg & (side < 0))
    return part_a, part_b


def rotate_symmetric_pair(img: Raster, axis: SymmetryAxis, theta: float) -> Raster:
    """Rotate the two symmetric parts by opposite angles about their own
    centroids."""
    for part in (axis.part_a, axis.part_b):
        if part.count == 0:
            raise EmptyInputError("rotate_symmetric_pair: empty symmetry part")

    def centroid(m: Mask) -> Point:
        ys, xs = np.nonzero(m.bits)
        return Point(float(xs.mean()), float(ys.mean()))

    out = rotate_patch(img, axis.part_a, centroid(axis.part_a), theta)
    out = rotate_patch(out, axis.part_b, centroid(axis.part_b), -theta)
    return out
