"""One-off deterministic training of the bundled digit checkpoint.

Development tool, not part of the installed package. Trains the small
convnet on the synthetic digit generator and writes
src/gestalt_adapter/weights/digits_cnn.pt.
"""
import sys
from pathlib import Path

import numpy as np
import torch
from torch import nn

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gestalt_adapter.model import DigitConvNet, save_checkpoint  # noqa: E402

from gestalt_probe.synth import digit_arrays  # noqa: E402

MEAN, STD = 0.5, 0.5


def main():
    torch.manual_seed(1234)
    torch.use_deterministic_algorithms(True)
    images, labels = digit_arrays(2000, seed=1)
    x = torch.from_numpy(images.astype(np.float32) / 255.0)
    x = ((x - MEAN) / STD)[:, None, :, :]
    y = torch.from_numpy(labels.astype(np.int64))
    model = DigitConvNet(10)
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    for epoch in range(8):
        perm = torch.randperm(len(x))
        total = 0.0
        for i in range(0, len(x), 64):
            idx = perm[i : i + 64]
            opt.zero_grad()
            loss = loss_fn(model(x[idx]), y[idx])
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(idx)
        with torch.no_grad():
            acc = (model(x).argmax(1) == y).float().mean()
        print(f"epoch {epoch}: loss {total / len(x):.4f} train acc {acc:.4f}")
    model.eval()
    out = Path(__file__).resolve().parents[1] / "src" / "gestalt_adapter" / "weights"
    out.mkdir(exist_ok=True)
    save_checkpoint(model, 10, out / "digits_cnn.pt", mean=MEAN, std=STD)
    print(f"wrote {out / 'digits_cnn.pt'}")


if __name__ == "__main__":
    main()
