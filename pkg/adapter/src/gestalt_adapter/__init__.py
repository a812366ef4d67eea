"""Reference external classifier for gestalt-probe sweeps."""

from .config import AdapterConfig, AdapterError
from .model import DigitConvNet, bundled_weights, load_checkpoint, save_checkpoint
from .serve import serve

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "DigitConvNet",
    "bundled_weights",
    "load_checkpoint",
    "save_checkpoint",
    "serve",
]
