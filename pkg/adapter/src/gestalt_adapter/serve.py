"""Stdin/stdout serve loop speaking the gestalt-probe classifier protocol.

Announces ``gestalt-proto 1 <class_count>`` then answers each JSON request
line with one JSON response line. Malformed requests get an error line and
the loop keeps going; a weights problem exits nonzero before the handshake.
"""
from __future__ import annotations

import argparse
import base64
import json
import sys

import numpy as np
import torch
from PIL import Image

from .config import AdapterConfig, AdapterError
from .model import bundled_weights, load_checkpoint

PROTOCOL_VERSION = 1


def preprocess(pixels: np.ndarray, cfg: AdapterConfig) -> torch.Tensor:
    """Raw uint8 pixels -> normalized 1x1xHxW float tensor."""
    if pixels.ndim == 3:
        img = Image.fromarray(pixels, "RGB").convert("L")
    else:
        img = Image.fromarray(pixels, "L")
    if img.size != cfg.resize:
        img = img.resize(cfg.resize, Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - cfg.mean) / cfg.std
    return torch.from_numpy(arr)[None, None, :, :]


def respond(line: str, model, cfg: AdapterConfig, class_count: int) -> str:
    req_id = None
    try:
        req = json.loads(line)
        req_id = req.get("id")
        width, height, channels = int(req["width"]), int(req["height"]), int(req["channels"])
        raw = base64.b64decode(req["pixels"], validate=True)
        expected = width * height * channels
        if len(raw) != expected:
            raise ValueError(f"pixel payload {len(raw)} bytes, expected {expected}")
        if channels not in (1, 3):
            raise ValueError(f"unsupported channel count {channels}")
        shape = (height, width) if channels == 1 else (height, width, 3)
        pixels = np.frombuffer(raw, dtype=np.uint8).reshape(shape)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        return json.dumps({"id": req_id, "error": f"bad request: {exc}"})
    with torch.no_grad():
        logits = model(preprocess(pixels, cfg))
        scores = torch.softmax(logits[0], dim=0).double()
    return json.dumps({"id": req_id, "scores": scores.tolist()})


def serve(cfg: AdapterConfig, stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    model, ckpt = load_checkpoint(cfg.weights)
    class_count = int(ckpt["class_count"])
    if cfg.class_count is not None and cfg.class_count != class_count:
        raise AdapterError(
            f"configured class_count {cfg.class_count} does not match "
            f"model output width {class_count}"
        )
    torch.manual_seed(0)
    print(f"gestalt-proto {PROTOCOL_VERSION} {class_count}", file=stdout, flush=True)
    for line in stdin:
        if not line.strip():
            continue
        print(respond(line, model, cfg, class_count), file=stdout, flush=True)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="gestalt-adapter",
        description="Serve a small convnet over the gestalt-probe line protocol",
    )
    ap.add_argument("--weights", default=None,
                    help="checkpoint path (default: bundled digit model)")
    ap.add_argument("--resize", nargs=2, type=int, default=None,
                    metavar=("W", "H"))
    ap.add_argument("--class-count", type=int, default=None)
    args = ap.parse_args(argv)
    weights = args.weights or bundled_weights()
    try:
        # normalization constants travel with the checkpoint
        _, ckpt = load_checkpoint(weights)
        cfg = AdapterConfig(
            weights=weights,
            resize=tuple(args.resize) if args.resize else (28, 28),
            mean=float(ckpt.get("mean", 0.5)),
            std=float(ckpt.get("std", 0.5)),
            class_count=args.class_count,
        )
        serve(cfg)
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return 1
    except (KeyboardInterrupt, BrokenPipeError):
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
