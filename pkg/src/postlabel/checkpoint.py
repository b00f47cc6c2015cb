"""RBMCKPT/1 checkpoint container.

Layout (all integers little-endian u32 unless noted):

    magic    4 bytes  b"RBMC"
    version  u32      currently 1; unknown versions are rejected
    n_visible, n_hidden, n_labels   u32 each (n_labels == 0: unlabeled)
    weights        n_visible*n_hidden f64 LE, row-major
    visible_bias   n_visible f64 LE
    hidden_bias    n_hidden f64 LE
    label_weights  n_labels*n_hidden f64 LE, row-major   (only if n_labels > 0)
    label_bias     n_labels f64 LE                       (only if n_labels > 0)
    meta_len  u32
    metadata  meta_len bytes of UTF-8 JSON
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .rbm import LabeledRbm, RbmParams

MAGIC = b"RBMC"
VERSION = 1


class CheckpointError(ValueError):
    """Malformed or unsupported checkpoint file."""


def checkpoint_bytes(model, metadata: dict | None = None) -> bytes:
    """Serialize an RbmParams or LabeledRbm to RBMCKPT/1 bytes."""
    if isinstance(model, LabeledRbm):
        base, n_labels = model.base, model.n_labels
    elif isinstance(model, RbmParams):
        base, n_labels = model, 0
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")

    parts = [
        MAGIC,
        struct.pack("<IIII", VERSION, base.n_visible, base.n_hidden, n_labels),
        np.ascontiguousarray(base.weights, dtype="<f8").tobytes(),
        np.ascontiguousarray(base.visible_bias, dtype="<f8").tobytes(),
        np.ascontiguousarray(base.hidden_bias, dtype="<f8").tobytes(),
    ]
    if n_labels > 0:
        parts.append(np.ascontiguousarray(model.label_weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(model.label_bias, dtype="<f8").tobytes())
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(meta)))
    parts.append(meta)
    return b"".join(parts)


def save_checkpoint(path, model, metadata: dict | None = None) -> None:
    with open(path, "wb") as f:
        f.write(checkpoint_bytes(model, metadata))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def parse_checkpoint(data: bytes):
    """Parse RBMCKPT/1 bytes into (model, metadata)."""
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic: not an RBMCKPT file")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    n_visible, n_hidden, n_labels = r.u32(), r.u32(), r.u32()
    if n_visible == 0 or n_hidden == 0:
        raise CheckpointError("zero-sized layer in header")

    weights = r.f64_array(n_visible * n_hidden).reshape(n_visible, n_hidden)
    visible_bias = r.f64_array(n_visible)
    hidden_bias = r.f64_array(n_hidden)
    base = RbmParams(weights, visible_bias, hidden_bias)

    model: RbmParams | LabeledRbm = base
    if n_labels > 0:
        label_weights = r.f64_array(n_labels * n_hidden).reshape(n_labels, n_hidden)
        label_bias = r.f64_array(n_labels)
        model = LabeledRbm(base, label_weights, label_bias)

    meta_len = r.u32()
    try:
        metadata = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"bad metadata blob: {e}") from e
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after checkpoint")
    return model, metadata


def load_checkpoint(path):
    with open(path, "rb") as f:
        return parse_checkpoint(f.read())
