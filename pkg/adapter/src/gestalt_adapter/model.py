"""Small grayscale convnet and its weights container.

Weights files are torch checkpoints holding the state dict plus the
class count and the preprocessing constants they were trained with.
"""
from __future__ import annotations

from pathlib import Path

import torch
from torch import nn

from .config import AdapterError


class DigitConvNet(nn.Module):
    def __init__(self, class_count: int = 10):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(1, 8, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(8, 16, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2),
        )
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(16 * 7 * 7, 64),
            nn.ReLU(),
            nn.Linear(64, class_count),
        )

    def forward(self, x):
        return self.head(self.features(x))


def save_checkpoint(model: DigitConvNet, class_count: int, path,
                    mean: float = 0.5, std: float = 0.5):
    torch.save(
        {
            "state_dict": model.state_dict(),
            "class_count": class_count,
            "mean": mean,
            "std": std,
        },
        path,
    )


def load_checkpoint(path) -> tuple[DigitConvNet, dict]:
    path = Path(path)
    if not path.exists():
        raise AdapterError(f"weights file not found: {path}")
    try:
        ckpt = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise AdapterError(f"cannot load weights {path}: {exc}") from exc
    if "state_dict" not in ckpt or "class_count" not in ckpt:
        raise AdapterError(f"{path}: not an adapter checkpoint")
    model = DigitConvNet(int(ckpt["class_count"]))
    try:
        model.load_state_dict(ckpt["state_dict"])
    except RuntimeError as exc:
        raise AdapterError(f"{path}: incompatible weights: {exc}") from exc
    model.eval()
    return model, ckpt


def bundled_weights() -> Path:
    return Path(__file__).parent / "weights" / "digits_cnn.pt"
