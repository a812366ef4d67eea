"""Gestalt-principle sensitivity analysis for image classifiers."""

from .engine import (
    CentroidModel,
    Item,
    SweepOptions,
    SweepResult,
    ValidationSet,
    accuracy,
    fit_centroid,
    g_knee,
    g_star_argmax,
    phi,
    run_sweep,
)
from .data_io import (
    load_idx,
    load_manifest,
    read_pnm,
    save_perturbed,
    write_idx,
    write_pnm,
)
from .perturb import (
    GestaltParam,
    Principle,
    SegmentedImage,
    SymmetryAxis,
    affine_distance,
    detect_symmetry,
    dotify,
    occlude,
    piecewise_affine,
    recolor,
    reduce_classes,
    rotate_symmetric_pair,
)
from .raster import Mask, Point, Raster, binarize, hue_rotate, rotate_patch, skeletonize, warp

__all__ = [
    "CentroidModel",
    "GestaltParam",
    "Item",
    "Mask",
    "Point",
    "Principle",
    "Raster",
    "SegmentedImage",
    "SweepOptions",
    "SweepResult",
    "SymmetryAxis",
    "ValidationSet",
    "accuracy",
    "affine_distance",
    "binarize",
    "detect_symmetry",
    "dotify",
    "fit_centroid",
    "g_knee",
    "g_star_argmax",
    "hue_rotate",
    "load_idx",
    "load_manifest",
    "occlude",
    "phi",
    "piecewise_affine",
    "read_pnm",
    "recolor",
    "reduce_classes",
    "rotate_patch",
    "rotate_symmetric_pair",
    "run_sweep",
    "save_perturbed",
    "skeletonize",
    "warp",
    "write_idx",
    "write_pnm",
]
