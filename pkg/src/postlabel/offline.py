"""Offline label-weight training over a recorded frame log.

Cycles through the labeled frames epoch-wise, re-deriving the negative
term from the current label weights on every visit, so later epochs see a
progressively better gradient approximation. Regular weights stay fixed.
With shuffling off, epoch 1 is definitionally identical to replaying the
frames through the online update in order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rbm import LabeledRbm, label_update_online
from .session import UNSURE


@dataclass
class OfflineConfig:
    epochs: int = 10
    lr: float = 0.05
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def train_labels_offline(
    m: LabeledRbm, frames, cfg: OfflineConfig
) -> tuple[LabeledRbm, list[float]]:
    """Per-frame label updates over the recorded log; returns the updated
    model and the mean |delta| per epoch. Frames labeled unsure are skipped;
    an all-unsure log is an error."""
    labeled = [f for f in frames if f.assigned_label != UNSURE]
    if not labeled:
        raise ValueError("no labeled frames in log")
    for f in labeled:
        if f.hidden_probs.shape != (m.n_hidden,):
            raise ValueError(
                f"frame {f.frame_id} hidden snapshot {f.hidden_probs.shape} "
                f"does not match n_hidden {m.n_hidden}"
            )
        if not 0 <= f.assigned_label < m.n_labels:
            raise ValueError(f"frame {f.frame_id} label {f.assigned_label} out of range")

    rng = np.random.default_rng(cfg.seed)
    report = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(labeled)) if cfg.shuffle else range(len(labeled))
        magnitude = 0.0
        for i in order:
            frame = labeled[i]
            m, delta = label_update_online(
                m, frame.hidden_probs, frame.assigned_label, cfg.lr
            )
            magnitude += float(np.abs(delta.d_label_weights).mean())
        report.append(magnitude / len(labeled))
    return m, report
