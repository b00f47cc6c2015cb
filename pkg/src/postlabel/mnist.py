"""MNIST IDX parsing, binarization, and train/validation splits.

Headers are big-endian per the IDX convention. Gzip-compressed files are
accepted transparently (sniffed by magic). Parsing is pure over byte
buffers and round-trips bit-exactly through the serializers.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass, field

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxError(ValueError):
    """Base class for IDX parse failures."""


class BadMagicError(IdxError):
    pass


class TruncatedError(IdxError):
    pass


class LabelRangeError(IdxError):
    pass


@dataclass
class Dataset:
    """Images with optional aligned labels and a provenance note."""

    images: np.ndarray                 # (n, rows, cols) uint8
    labels: np.ndarray | None = None   # (n,) uint8, or None once stripped
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        if self.images.ndim != 3:
            raise ValueError("images must be (n, rows, cols)")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.uint8)
            if self.labels.shape != (len(self.images),):
                raise ValueError("labels do not align 1:1 with images")
            if self.labels.size and self.labels.max() > 9:
                raise ValueError("labels must be in [0, 9]")

    def __len__(self) -> int:
        return len(self.images)


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an IDX3 image file into a (count, rows, cols) uint8 array."""
    if len(data) < 4 or struct.unpack(">I", data[:4])[0] != IMAGE_MAGIC:
        raise BadMagicError("bad magic: not an IDX image file")
    if len(data) < 16:
        raise TruncatedError("image header truncated")
    count, rows, cols = struct.unpack(">III", data[4:16])
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise TruncatedError(
            f"image payload truncated: need {expected} bytes, have {len(data)}"
        )
    if len(data) > expected:
        raise IdxError(f"{len(data) - expected} trailing bytes after image payload")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16)
    return pixels.reshape(count, rows, cols).copy()


def parse_idx_labels(data: bytes, max_label: int | None = 9) -> np.ndarray:
    """Parse an IDX1 label file; values validated <= max_label if given."""
    if len(data) < 4 or struct.unpack(">I", data[:4])[0] != LABEL_MAGIC:
        raise BadMagicError("bad magic: not an IDX label file")
    if len(data) < 8:
        raise TruncatedError("label header truncated")
    count = struct.unpack(">I", data[4:8])[0]
    if len(data) < 8 + count:
        raise TruncatedError(
            f"label payload truncated: need {8 + count} bytes, have {len(data)}"
        )
    if len(data) > 8 + count:
        raise IdxError(f"{len(data) - 8 - count} trailing bytes after label payload")
    labels = np.frombuffer(data, dtype=np.uint8, offset=8).copy()
    if max_label is not None and labels.size and labels.max() > max_label:
        raise LabelRangeError(
            f"label {int(labels.max())} exceeds maximum {max_label}"
        )
    return labels


def serialize_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (n, rows, cols)")
    n, rows, cols = images.shape
    return struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + images.tobytes()


def serialize_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABEL_MAGIC, len(labels)) + labels.tobytes()


def read_idx_file(path) -> bytes:
    """Read a file, transparently decompressing gzip by magic sniff."""
    with open(path, "rb") as f:
        head = f.read(2)
        f.seek(0)
        if head == b"\x1f\x8b":
            with gzip.open(f) as g:
                return g.read()
        return f.read()


def _find_file(data_dir, name: str) -> str:
    for candidate in (name, name + ".gz"):
        path = os.path.join(data_dir, candidate)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"{name}[.gz] not found in {data_dir}")


def load_dataset(data_dir, train: bool = True) -> Dataset:
    """Load one split from canonically named IDX files under data_dir."""
    img_name, lbl_name = (
        (TRAIN_IMAGES, TRAIN_LABELS) if train else (TEST_IMAGES, TEST_LABELS)
    )
    img_path = _find_file(data_dir, img_name)
    lbl_path = _find_file(data_dir, lbl_name)
    images = parse_idx_images(read_idx_file(img_path))
    labels = parse_idx_labels(read_idx_file(lbl_path))
    if len(images) != len(labels):
        raise IdxError(
            f"image/label count mismatch: {len(images)} vs {len(labels)}"
        )
    return Dataset(images, labels, provenance={"images": img_path, "labels": lbl_path})


def binarize(
    pixels: np.ndarray,
    mode: str = "threshold",
    threshold: float = 0.5,
    seed=None,
) -> np.ndarray:
    """Turn uint8 images into flat 0/1 float vectors.

    threshold mode: bit = 1 iff pixel/255 > threshold. stochastic mode:
    bit ~ Bernoulli(pixel/255) under the given seed. A (rows, cols) input
    yields one flat vector; an (n, rows, cols) batch yields one per row.
    """
    pixels = np.asarray(pixels)
    single = pixels.ndim == 2
    batch = pixels[None] if single else pixels
    flat = batch.reshape(batch.shape[0], -1).astype(np.float64) / 255.0
    if mode == "threshold":
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        bits = (flat > threshold).astype(np.float64)
    elif mode == "stochastic":
        rng = np.random.default_rng(seed)
        bits = (rng.random(flat.shape) < flat).astype(np.float64)
    else:
        raise ValueError(f"unknown binarize mode {mode!r}")
    return bits[0] if single else bits


def strip_labels(ds: Dataset) -> Dataset:
    """Detach labels for the unsupervised phase."""
    return Dataset(ds.images, None, dict(ds.provenance, labels_stripped=True))


def make_splits(ds: Dataset, seed) -> tuple[Dataset, Dataset]:
    """Deterministic 5:1 train/validation split of a training set."""
    n = len(ds)
    if n < 6:
        raise ValueError(f"need at least 6 images to split 5:1, have {n}")
    n_val = n // 6
    perm = np.random.default_rng(seed).permutation(n)
    train_idx, val_idx = perm[: n - n_val], perm[n - n_val:]

    def take(idx, role):
        return Dataset(
            ds.images[idx],
            None if ds.labels is None else ds.labels[idx],
            dict(ds.provenance, split=role, split_seed=seed),
        )

    return take(train_idx, "train"), take(val_idx, "validation")
