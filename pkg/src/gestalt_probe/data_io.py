"""Dataset ingestion and lossless persistence.

Reads the big-endian IDX containers of the MNIST archives and line-oriented
manifests pointing at mask-annotated image directories; writes perturbed sets
as deterministic binary PGM/PPM files plus an index.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, GestaltError
from .engine import Item, ValidationSet
from .perturb import SegmentedImage
from .raster import Mask, Raster

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049

MANIFEST_HEADER = "gestalt-manifest v1"


def _read_be32(buf: bytes, offset: int, path) -> int:
    if offset + 4 > len(buf):
        raise FormatError(f"{path}: truncated header at byte {offset}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(images_path, labels_path) -> ValidationSet:
    """Parse an MNIST-style IDX image/label pair into a grayscale set."""
    img_buf = Path(images_path).read_bytes()
    lbl_buf = Path(labels_path).read_bytes()
    magic = _read_be32(img_buf, 0, images_path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(
            f"{images_path}: bad image magic {magic} (expected {IDX_IMAGE_MAGIC})"
        )
    count = _read_be32(img_buf, 4, images_path)
    rows = _read_be32(img_buf, 8, images_path)
    cols = _read_be32(img_buf, 12, images_path)
    need = 16 + count * rows * cols
    if len(img_buf) < need:
        raise FormatError(
            f"{images_path}: truncated, need {need} bytes, have {len(img_buf)}"
        )
    lmagic = _read_be32(lbl_buf, 0, labels_path)
    if lmagic != IDX_LABEL_MAGIC:
        raise FormatError(
            f"{labels_path}: bad label magic {lmagic} (expected {IDX_LABEL_MAGIC})"
        )
    lcount = _read_be32(lbl_buf, 4, labels_path)
    if lcount != count:
        raise FormatError(
            f"image count {count} does not match label count {lcount}"
        )
    if len(lbl_buf) < 8 + count:
        raise FormatError(f"{labels_path}: truncated labels")
    pixels = np.frombuffer(img_buf, dtype=np.uint8, count=count * rows * cols, offset=16)
    pixels = pixels.reshape(count, rows, cols)
    labels = np.frombuffer(lbl_buf, dtype=np.uint8, count=count, offset=8)
    items = [Item(Raster(pixels[i].copy()), int(labels[i])) for i in range(count)]
    return ValidationSet(tuple(items), class_count=int(labels.max()) + 1 if count else 0)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path):
    """Write an (n, rows, cols) uint8 stack and its labels in IDX layout."""
    n, rows, cols = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def _load_raster(path: Path) -> Raster:
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        return read_pnm(path)
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB" if img.mode in ("RGBA", "P", "CMYK") else "L")
    return Raster(np.asarray(img))


def load_manifest(path) -> ValidationSet:
    """Load a `gestalt-manifest v1` file: one JSON record per line with
    image_path, label, and optional masks {class_id: path} / target_class."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != MANIFEST_HEADER:
        raise FormatError(f"{path}: missing '{MANIFEST_HEADER}' header line")
    items = []
    max_label = -1
    for ln, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{ln}: bad record: {exc}") from exc
        img_path = path.parent / rec["image_path"]
        if not img_path.exists():
            raise FormatError(f"{path}:{ln}: missing image file {img_path}")
        raster = _load_raster(img_path)
        label = int(rec["label"])
        max_label = max(max_label, label)
        seg = None
        if rec.get("masks"):
            class_masks = []
            for cid_str, mpath in sorted(rec["masks"].items(), key=lambda kv: int(kv[0])):
                mp = path.parent / mpath
                if not mp.exists():
                    raise FormatError(f"{path}:{ln}: missing mask file {mp}")
                m = _load_raster(mp)
                if (m.height, m.width) != (raster.height, raster.width):
                    raise FormatError(
                        f"{path}:{ln}: mask {mp} is {m.width}x{m.height}, "
                        f"image is {raster.width}x{raster.height}"
                    )
                bits = (
                    m.pixels if m.channels == 1 else m.pixels.max(axis=2)
                ) > 0
                class_masks.append((int(cid_str), Mask(bits)))
            target = rec.get("target_class", label)
            if target not in [cid for cid, _ in class_masks]:
                raise FormatError(
                    f"{path}:{ln}: target class {target} has no mask entry"
                )
            seg = SegmentedImage(raster, tuple(class_masks), target)
        items.append(Item(raster, label, seg))
    if not items:
        raise FormatError(f"{path}: manifest has no entries")
    declared = max_label + 1
    return ValidationSet(tuple(items), class_count=declared)


def write_pnm(raster: Raster, path):
    """Deterministic binary PGM (grayscale) or PPM (RGB) encoding."""
    header = f"P{5 if raster.channels == 1 else 6}\n{raster.width} {raster.height}\n255\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(raster.pixels.tobytes())


def read_pnm(path) -> Raster:
    buf = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        fields.append(buf[start:pos])
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1  # single whitespace byte after maxval
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported PNM magic {magic!r}")
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PNM supported (maxval {maxval})")
    ch = 1 if magic == b"P5" else 3
    need = w * h * ch
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    shape = (h, w) if ch == 1 else (h, w, 3)
    return Raster(data.reshape(shape).copy())


def save_perturbed(vset, directory, meta=None) -> int:
    """Write each raster losslessly plus an index file; returns the number of
    image files written.

    Accepts a ValidationSet or a bare list of items (which may be empty, in
    which case only an empty index is produced). ``meta`` optionally maps
    item index -> (source, principle, g) strings recorded in the index.
    """
    items = vset.items if isinstance(vset, ValidationSet) else list(vset)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = 0
    index_lines = []
    for i, it in enumerate(items):
        ext = "pgm" if it.image.channels == 1 else "ppm"
        name = f"item_{i:05d}.{ext}"
        try:
            write_pnm(it.image, directory / name)
        except OSError as exc:
            raise GestaltError(f"failed writing {directory / name}: {exc}") from exc
        written += 1
        source, principle, g = (meta or {}).get(i, ("", "", ""))
        index_lines.append(
            json.dumps(
                {
                    "file": name,
                    "label": it.label,
                    "source": source,
                    "principle": principle,
                    "g": g,
                },
                sort_keys=True,
            )
        )
    (directory / "index.jsonl").write_text("\n".join(index_lines) + ("\n" if index_lines else ""))
    return written
