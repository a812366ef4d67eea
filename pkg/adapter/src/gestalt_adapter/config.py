"""Serve-time configuration: which weights to load and how to preprocess."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class AdapterError(Exception):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    weights: Path
    resize: tuple[int, int] = (28, 28)  # (width, height) fed to the model
    mean: float = 0.5
    std: float = 0.5
    class_count: int | None = None  # checked against the loaded model if set

    def __post_init__(self):
        object.__setattr__(self, "weights", Path(self.weights))
        w, h = self.resize
        if w < 1 or h < 1:
            raise AdapterError(f"bad resize dims {self.resize}")
        if self.std == 0:
            raise AdapterError("std must be nonzero")
