"""Accuracy measurement, sweep execution, and the drop-detector math.

The engine compares the accuracy of a classifier on an unperturbed
validation set against copies perturbed at each value of the principle's
parameter, records the per-point accuracy drop, and locates both the
maximal-drop parameter and the largest parameter whose drop stays under a
violation threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import ClassifierError, EmptyInputError, GestaltError
from .perturb import (
    GestaltParam,
    Principle,
    RIGHT_HALF,
    SegmentedImage,
    detect_symmetry,
    dotify,
    occlude,
    piecewise_affine,
    recolor,
    reduce_classes,
    rotate_symmetric_pair,
)
from .raster import Raster


class Classifier(Protocol):
    class_count: int

    def scores(self, img: Raster) -> np.ndarray: ...


@dataclass(frozen=True)
class Item:
    image: Raster
    label: int
    seg: Optional[SegmentedImage] = None


@dataclass(frozen=True)
class ValidationSet:
    items: tuple
    class_count: int

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise GestaltError("validation set is empty")
        for i, it in enumerate(self.items):
            if not 0 <= it.label < self.class_count:
                raise GestaltError(
                    f"item {i}: label {it.label} outside 0..{self.class_count - 1}"
                )

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class SweepPoint:
    param: GestaltParam
    h: float
    phi: float
    p_true: float
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    principle: Principle
    grid: tuple
    h_base: float
    p_base: float
    points: tuple
    seed: int
    excluded: int = 0  # items dropped before the sweep (e.g. no symmetry found)


def phi(h_base: float, h_g: float) -> float:
    """Accuracy drop: baseline minus perturbed-set accuracy."""
    return h_base - h_g


def _score_set(classifier: Classifier, items) -> tuple[float, float]:
    """(top-1 accuracy, mean true-class probability) over the items."""
    correct = 0
    p_sum = 0.0
    for i, it in enumerate(items):
        try:
            s = np.asarray(classifier.scores(it.image), dtype=np.float64)
        except GestaltError:
            raise
        except Exception as exc:
            raise ClassifierError(f"classifier failed on item {i}: {exc}") from exc
        if s.shape != (classifier.class_count,):
            raise ClassifierError(
                f"classifier returned {s.shape} scores for item {i}, "
                f"expected ({classifier.class_count},)"
            )
        if int(np.argmax(s)) == it.label:
            correct += 1
        total = float(s.sum())
        p_sum += float(s[it.label]) / total if total > 0 else 0.0
    return correct / len(items), p_sum / len(items)


def accuracy(classifier: Classifier, vset: ValidationSet) -> float:
    """Fraction of items whose argmax score equals the label (ties resolve to
    the lowest class index)."""
    return _score_set(classifier, vset.items)[0]


@dataclass
class SweepOptions:
    threshold: int = 128  # foreground binarization for closure/proximity/symmetry
    half: str = RIGHT_HALF  # transformed half for continuation
    dot_diameter: float = 2.0
    symmetry_step: float = 1.0


def _mix_seed(seed: int, point_idx: int, item_idx: int) -> int:
    return (seed * 1_000_003 + point_idx * 7_919 + item_idx * 13) % (2**32)


def _perturb_item(
    item: Item,
    param: GestaltParam,
    item_seed: int,
    opts: SweepOptions,
    axis=None,
) -> Raster:
    p = param.principle
    if p is Principle.CLOSURE:
        return occlude(item.image, param.value, item_seed, threshold=opts.threshold)
    if p is Principle.PROXIMITY:
        return dotify(
            item.image, param.value, threshold=opts.threshold,
            dot_diameter=opts.dot_diameter,
        )
    if p is Principle.CONTINUATION:
        return piecewise_affine(item.image, param.value, region=opts.half)
    if p is Principle.SIMILARITY:
        return recolor(item.seg, param.value)
    if p is Principle.FIGURE_GROUND:
        return reduce_classes(item.seg, int(param.value))
    if p is Principle.SYMMETRY:
        return rotate_symmetric_pair(item.image, axis, param.value)
    raise GestaltError(f"unknown principle {p}")


def _check_requirements(vset: ValidationSet, principle: Principle):
    needs_seg = principle in (Principle.SIMILARITY, Principle.FIGURE_GROUND)
    for i, it in enumerate(vset.items):
        if needs_seg and it.seg is None:
            raise GestaltError(
                f"{principle.value} sweep needs segmentation masks; item {i} has none"
            )
        if principle is Principle.SIMILARITY and it.image.channels != 3:
            raise GestaltError(
                f"similarity sweep needs color images; item {i} is grayscale"
            )


def run_sweep(
    classifier: Classifier,
    vset: ValidationSet,
    principle: Principle,
    grid: Sequence[GestaltParam],
    seed: int,
    opts: SweepOptions | None = None,
) -> SweepResult:
    """Measure baseline accuracy once, then accuracy and drop at every grid
    value of the principle's parameter. Deterministic for a fixed seed."""
    if not grid:
        raise GestaltError("empty parameter grid")
    for g in grid:
        if g.principle is not principle:
            raise GestaltError(f"grid value {g} is not a {principle.value} parameter")
    opts = opts or SweepOptions()
    _check_requirements(vset, principle)

    items = list(vset.items)
    axes = [None] * len(items)
    excluded = 0
    if principle is Principle.SYMMETRY:
        usable, usable_axes = [], []
        for it in items:
            try:
                ax = detect_symmetry(
                    it.image, threshold=opts.threshold, step=opts.symmetry_step
                )
                if ax.part_a.count == 0 or ax.part_b.count == 0:
                    raise EmptyInputError("degenerate symmetry parts")
            except GestaltError:
                excluded += 1
                continue
            usable.append(it)
            usable_axes.append(ax)
        if not usable:
            raise GestaltError("no item has a detectable symmetry")
        items, axes = usable, usable_axes

    h_base, p_base = _score_set(classifier, items)
    points = []
    for pi, g in enumerate(grid):
        try:
            perturbed = [
                Item(
                    _perturb_item(it, g, _mix_seed(seed, pi, ii), opts, axes[ii]),
                    it.label,
                    it.seg,
                )
                for ii, it in enumerate(items)
            ]
        except ClassifierError:
            raise
        except GestaltError as exc:
            points.append(
                SweepPoint(g, float("nan"), float("nan"), float("nan"), True, str(exc))
            )
            continue
        h_g, p_g = _score_set(classifier, perturbed)
        points.append(SweepPoint(g, h_g, phi(h_base, h_g), p_g))
    return SweepResult(
        principle, tuple(grid), h_base, p_base, tuple(points), seed, excluded
    )


def g_star_argmax(result: SweepResult) -> GestaltParam:
    """Grid parameter with the maximal accuracy drop; ties resolve to the
    smallest parameter."""
    best = None
    for pt in result.points:
        if pt.failed:
            continue
        if (
            best is None
            or pt.phi > best.phi
            or (pt.phi == best.phi and pt.param.scalar() < best.param.scalar())
        ):
            best = pt
    if best is None:
        raise GestaltError("every sweep point failed")
    return best.param


def g_knee(result: SweepResult, tau: float) -> Optional[GestaltParam]:
    """Largest parameter whose drop stays <= tau before the first exceedance;
    None when the first point already exceeds tau. Points are ordered by the
    parameter's scalar magnitude (affine distance for continuation grids)."""
    pts = sorted(
        (pt for pt in result.points if not pt.failed),
        key=lambda pt: pt.param.scalar(),
    )
    if not pts:
        raise GestaltError("every sweep point failed")
    last_ok = None
    for pt in pts:
        if pt.phi > tau:
            return last_ok.param if last_ok is not None else None
        last_ok = pt
    return last_ok.param


# --------------------------------------------------------------------------
# Built-in baseline classifier: nearest class-centroid with softmax scores
# --------------------------------------------------------------------------

@dataclass
class CentroidModel:
    """Mean-pixel template per class; scores are a softmax over negative
    Euclidean distances divided by the temperature."""

    centroids: np.ndarray  # (C, D) in [0,1]
    temperature: float

    @property
    def class_count(self) -> int:
        return self.centroids.shape[0]

    def scores(self, img: Raster) -> np.ndarray:
        flat = img.pixels.astype(np.float64).ravel() / 255.0
        if flat.shape[0] != self.centroids.shape[1]:
            raise GestaltError(
                f"image dimension {flat.shape[0]} does not match centroid "
                f"dimension {self.centroids.shape[1]}"
            )
        d = np.linalg.norm(self.centroids - flat, axis=1)
        z = -d / self.temperature
        z -= z.max()
        e = np.exp(z)
        return e / e.sum()


def fit_centroid(train: ValidationSet, temperature: float = 1.0) -> CentroidModel:
    """Per-class mean of flattened, [0,1]-normalized pixels."""
    if temperature <= 0:
        raise GestaltError("temperature must be positive")
    dim = None
    sums = [None] * train.class_count
    counts = [0] * train.class_count
    for it in train.items:
        flat = it.image.pixels.astype(np.float64).ravel() / 255.0
        if dim is None:
            dim = flat.shape[0]
        elif flat.shape[0] != dim:
            raise GestaltError("training rasters have mixed dimensions")
        if sums[it.label] is None:
            sums[it.label] = np.zeros(dim)
        sums[it.label] += flat
        counts[it.label] += 1
    missing = [c for c in range(train.class_count) if counts[c] == 0]
    if missing:
        raise GestaltError(f"no training items for class(es) {missing}")
    centroids = np.stack([sums[c] / counts[c] for c in range(train.class_count)])
    return CentroidModel(centroids, temperature)
