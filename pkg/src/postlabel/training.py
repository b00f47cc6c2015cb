"""Training loops: unsupervised CD-N pretraining and the (semi-)supervised
baseline with a label-extended visible layer.

Runs are fully determined by (config, seed, data): every random stream is
spawned from the config seed, and checkpoint files written by two identical
runs are bitwise equal (checkpoint metadata carries no timestamps).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .mnist import Dataset, binarize
from .rbm import (
    LabeledRbm,
    RbmParams,
    cd_update,
    hidden_probs_labeled,
    init_rbm,
    reconstruction_error,
    sample_bernoulli,
    sigmoid,
    with_labels,
)


@dataclass
class TrainConfig:
    n_hidden: int = 100
    cd_steps: int = 1
    lr: float = 0.05
    epochs: int = 5
    batch_size: int = 10
    seed: int = 0
    binarize_mode: str = "threshold"
    binarize_threshold: float = 0.5
    labeled_fraction: float = 0.0   # baseline trainer only
    n_labels: int = 10
    weight_scale: float = 0.01
    checkpoint_every: int = 5

    def __post_init__(self):
        if self.cd_steps < 1:
            raise ValueError("cd_steps must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.labeled_fraction <= 1.0:
            raise ValueError("labeled_fraction must be in [0, 1]")


@dataclass
class TrainReport:
    epoch_errors: list[float] = field(default_factory=list)
    wall_time_s: float = 0.0
    checkpoint_path: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _binarized(cfg: TrainConfig, data: Dataset, seed) -> np.ndarray:
    return binarize(
        data.images,
        mode=cfg.binarize_mode,
        threshold=cfg.binarize_threshold,
        seed=seed,
    )


def _streams(seed, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _checkpoint_meta(cfg: TrainConfig, kind: str, epochs_done: int) -> dict:
    return {
        "kind": kind,
        "seed": cfg.seed,
        "lr": cfg.lr,
        "cd_steps": cfg.cd_steps,
        "epochs": epochs_done,
        "batch_size": cfg.batch_size,
        "init": {"weights": "gaussian", "scale": cfg.weight_scale, "biases": "zero"},
    }


def train_unsupervised(
    cfg: TrainConfig, data: Dataset, out_path=None
) -> tuple[RbmParams, TrainReport]:
    """CD-N training of the regular weights on unlabeled images.

    Labels on the dataset, if any, are ignored. Logs the mean one-step
    reconstruction error over the training set after each epoch and writes
    a checkpoint at the end plus every cfg.checkpoint_every epochs.
    """
    start = time.monotonic()
    bin_rng, cd_rng, shuffle_rng, recon_rng = _streams(cfg.seed, 4)
    vectors = _binarized(cfg, data, bin_rng)
    n = len(vectors)
    if n == 0:
        raise ValueError("empty dataset")

    model = init_rbm(vectors.shape[1], cfg.n_hidden, cfg.seed, cfg.weight_scale)
    report = TrainReport()
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch = vectors[order[lo:lo + cfg.batch_size]]
            model = cd_update(model, batch, cfg.cd_steps, cfg.lr, cd_rng)
        errors = reconstruction_error(model, vectors, recon_rng)
        report.epoch_errors.append(float(np.mean(errors)))
        if out_path and (epoch + 1) % cfg.checkpoint_every == 0 and epoch + 1 < cfg.epochs:
            save_checkpoint(
                f"{out_path}.epoch{epoch + 1}",
                model,
                _checkpoint_meta(cfg, "unsupervised", epoch + 1),
            )

    if out_path:
        save_checkpoint(out_path, model, _checkpoint_meta(cfg, "unsupervised", cfg.epochs))
        report.checkpoint_path = str(out_path)
    report.wall_time_s = time.monotonic() - start
    return model, report


def _cd_update_labeled(
    m: LabeledRbm,
    batch: np.ndarray,
    one_hot: np.ndarray,
    n_steps: int,
    lr: float,
    rng: np.random.Generator,
) -> LabeledRbm:
    """CD step on the label-extended visible layer: images and one-hot
    labels jointly drive the hidden units, and the chain reconstructs both."""
    n = batch.shape[0]
    h_data = hidden_probs_labeled(m, batch, one_hot)
    pos_w = batch.T @ h_data / n
    pos_lw = one_hot.T @ h_data / n
    pos_vb = batch.mean(axis=0)
    pos_lb = one_hot.mean(axis=0)
    pos_hb = h_data.mean(axis=0)

    v, a = batch, one_hot
    for _ in range(n_steps):
        h = sample_bernoulli(hidden_probs_labeled(m, v, a), rng)
        v = sample_bernoulli(sigmoid(h @ m.base.weights.T + m.base.visible_bias), rng)
        a = sample_bernoulli(sigmoid(h @ m.label_weights.T + m.label_bias), rng)
    h_model = hidden_probs_labeled(m, v, a)
    neg_w = v.T @ h_model / n
    neg_lw = a.T @ h_model / n

    base = RbmParams(
        m.base.weights + lr * (pos_w - neg_w),
        m.base.visible_bias + lr * (pos_vb - v.mean(axis=0)),
        m.base.hidden_bias + lr * (pos_hb - h_model.mean(axis=0)),
    )
    return LabeledRbm(
        base,
        m.label_weights + lr * (pos_lw - neg_lw),
        m.label_bias + lr * (pos_lb - a.mean(axis=0)),
    )


def train_supervised_baseline(
    cfg: TrainConfig, data: Dataset, out_path=None
) -> tuple[LabeledRbm, TrainReport]:
    """Classic (semi-)supervised comparison model.

    A seeded cfg.labeled_fraction subset of examples keeps its labels and
    trains regular and label weights jointly; the remaining examples run
    plain CD on the regular weights only.
    """
    if data.labels is None:
        raise ValueError("baseline training requires a labeled dataset")
    start = time.monotonic()
    bin_rng, cd_rng, shuffle_rng, recon_rng, mask_rng = _streams(cfg.seed, 5)
    vectors = _binarized(cfg, data, bin_rng)
    n = len(vectors)
    if n == 0:
        raise ValueError("empty dataset")

    one_hot = np.zeros((n, cfg.n_labels))
    one_hot[np.arange(n), data.labels] = 1.0
    labeled_mask = np.zeros(n, dtype=bool)
    n_labeled = int(round(cfg.labeled_fraction * n))
    labeled_mask[mask_rng.choice(n, size=n_labeled, replace=False)] = True

    model = with_labels(
        init_rbm(vectors.shape[1], cfg.n_hidden, cfg.seed, cfg.weight_scale),
        cfg.n_labels,
    )
    report = TrainReport()
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            lab = idx[labeled_mask[idx]]
            unlab = idx[~labeled_mask[idx]]
            if len(lab):
                model = _cd_update_labeled(
                    model, vectors[lab], one_hot[lab], cfg.cd_steps, cfg.lr, cd_rng
                )
            if len(unlab):
                base = cd_update(model.base, vectors[unlab], cfg.cd_steps, cfg.lr, cd_rng)
                model = LabeledRbm(base, model.label_weights, model.label_bias)
        errors = reconstruction_error(model.base, vectors, recon_rng)
        report.epoch_errors.append(float(np.mean(errors)))

    if out_path:
        save_checkpoint(out_path, model, _checkpoint_meta(cfg, "baseline", cfg.epochs))
        report.checkpoint_path = str(out_path)
    report.wall_time_s = time.monotonic() - start
    return model, report
