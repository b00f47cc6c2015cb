"""Core RBM math: conditionals, energy, Gibbs sampling, CD updates, classification.

Binary vectors and probability vectors are plain float64 ndarrays. All
operations accept either a single vector or a 2-D batch (rows = examples)
and broadcast accordingly. Parameter structures are treated as immutable:
every update returns a new object and never writes through shared arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class RbmParams:
    """Weights and biases of a binary-binary RBM.

    weights[i, j] connects visible unit i to hidden unit j.
    """

    weights: np.ndarray       # (n_visible, n_hidden)
    visible_bias: np.ndarray  # (n_visible,)
    hidden_bias: np.ndarray   # (n_hidden,)

    def __post_init__(self):
        w = _as_float_array(self.weights, "weights")
        vb = _as_float_array(self.visible_bias, "visible_bias")
        hb = _as_float_array(self.hidden_bias, "hidden_bias")
        if w.ndim != 2 or vb.ndim != 1 or hb.ndim != 1:
            raise ValueError("weights must be 2-D, biases 1-D")
        if w.shape != (vb.shape[0], hb.shape[0]):
            raise ValueError(
                f"inconsistent shapes: weights {w.shape}, "
                f"visible_bias {vb.shape}, hidden_bias {hb.shape}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "visible_bias", vb)
        object.__setattr__(self, "hidden_bias", hb)

    @property
    def n_visible(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class LabeledRbm:
    """An RBM plus label weights and biases for k label units.

    label_weights[k, j] connects label unit k to hidden unit j. The base
    parameters are shared by reference; label updates never touch them.
    """

    base: RbmParams
    label_weights: np.ndarray  # (n_labels, n_hidden)
    label_bias: np.ndarray     # (n_labels,)

    def __post_init__(self):
        lw = _as_float_array(self.label_weights, "label_weights")
        lb = _as_float_array(self.label_bias, "label_bias")
        if lw.ndim != 2 or lb.ndim != 1:
            raise ValueError("label_weights must be 2-D, label_bias 1-D")
        if lw.shape != (lb.shape[0], self.base.n_hidden):
            raise ValueError(
                f"label shapes {lw.shape}/{lb.shape} do not match "
                f"n_hidden={self.base.n_hidden}"
            )
        object.__setattr__(self, "label_weights", lw)
        object.__setattr__(self, "label_bias", lb)

    @property
    def n_labels(self) -> int:
        return self.label_weights.shape[0]

    @property
    def n_visible(self) -> int:
        return self.base.n_visible

    @property
    def n_hidden(self) -> int:
        return self.base.n_hidden


@dataclass(frozen=True)
class LabelDelta:
    """One online label-weight update, the unit of undo.

    Carries both the additive delta and the exact pre-update parameter
    arrays, so reverting restores the previous state bitwise instead of
    relying on floating-point cancellation.
    """

    d_label_weights: np.ndarray
    d_label_bias: np.ndarray
    prev_label_weights: np.ndarray
    prev_label_bias: np.ndarray


def init_rbm(n_visible: int, n_hidden: int, seed, weight_scale: float = 0.01) -> RbmParams:
    """Gaussian(0, weight_scale) weights, zero biases."""
    if n_visible < 1 or n_hidden < 1:
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, weight_scale, size=(n_visible, n_hidden))
    return RbmParams(weights, np.zeros(n_visible), np.zeros(n_hidden))


def with_labels(base: RbmParams, n_labels: int) -> LabeledRbm:
    """Attach zero-initialized label weights/biases to a trained base model."""
    if n_labels < 1:
        raise ValueError("n_labels must be positive")
    return LabeledRbm(base, np.zeros((n_labels, base.n_hidden)), np.zeros(n_labels))


def sigmoid(x):
    """Numerically stable logistic function; saturates instead of overflowing."""
    return expit(x)


def hidden_probs(m: RbmParams, v: np.ndarray) -> np.ndarray:
    """P(h_j = 1 | v) for each hidden unit."""
    v = np.asarray(v, dtype=np.float64)
    return sigmoid(v @ m.weights + m.hidden_bias)


def hidden_probs_labeled(m: LabeledRbm, v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """P(h_j = 1 | v, a) with label activations a feeding the hidden layer."""
    v = np.asarray(v, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    return sigmoid(v @ m.base.weights + a @ m.label_weights + m.base.hidden_bias)


def visible_probs(m: RbmParams, h: np.ndarray) -> np.ndarray:
    """P(v_i = 1 | h) for each visible unit."""
    h = np.asarray(h, dtype=np.float64)
    return sigmoid(h @ m.weights.T + m.visible_bias)


def label_probs(m: LabeledRbm, h_act: np.ndarray) -> np.ndarray:
    """Label activation probabilities reconstructed from hidden activations."""
    h_act = np.asarray(h_act, dtype=np.float64)
    return sigmoid(h_act @ m.label_weights.T + m.label_bias)


def sample_bernoulli(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli draws, one per entry of p; 0/1 floats."""
    p = np.asarray(p, dtype=np.float64)
    return (rng.random(p.shape) < p).astype(np.float64)


def energy(m: RbmParams, v: np.ndarray, h: np.ndarray) -> float:
    """E(v, h) = -v·W·h - v·b - h·c."""
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if v.shape != (m.n_visible,) or h.shape != (m.n_hidden,):
        raise ValueError(
            f"state shapes {v.shape}/{h.shape} do not match model "
            f"({m.n_visible}, {m.n_hidden})"
        )
    return float(-(v @ m.weights @ h) - v @ m.visible_bias - h @ m.hidden_bias)


def gibbs_step(m: RbmParams, v: np.ndarray, rng: np.random.Generator):
    """One v -> h -> v alternation.

    Returns (v_next, h_sample, v_probs); the chain advances on samples while
    v_probs is kept for display and reconstruction metrics.
    """
    h = sample_bernoulli(hidden_probs(m, v), rng)
    v_probs = visible_probs(m, h)
    v_next = sample_bernoulli(v_probs, rng)
    return v_next, h, v_probs


def cd_update(
    m: RbmParams,
    batch: np.ndarray,
    n_steps: int,
    lr: float,
    rng: np.random.Generator,
) -> RbmParams:
    """One contrastive-divergence update from a minibatch of data vectors.

    Positive statistics pair the data with hidden probabilities; the chain
    then runs n_steps fully sampled Gibbs alternations, and the negative
    statistics pair the final visible state with its hidden probabilities.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if lr < 0:
        raise ValueError("lr must be non-negative")
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise ValueError("batch is empty")
    if batch.shape[1] != m.n_visible:
        raise ValueError(f"batch width {batch.shape[1]} != n_visible {m.n_visible}")
    if lr == 0:
        return m

    n = batch.shape[0]
    h_data = hidden_probs(m, batch)
    pos_w = batch.T @ h_data / n
    pos_vb = batch.mean(axis=0)
    pos_hb = h_data.mean(axis=0)

    v = batch
    for _ in range(n_steps):
        h = sample_bernoulli(hidden_probs(m, v), rng)
        v = sample_bernoulli(visible_probs(m, h), rng)
    h_model = hidden_probs(m, v)
    neg_w = v.T @ h_model / n
    neg_vb = v.mean(axis=0)
    neg_hb = h_model.mean(axis=0)

    return RbmParams(
        m.weights + lr * (pos_w - neg_w),
        m.visible_bias + lr * (pos_vb - neg_vb),
        m.hidden_bias + lr * (pos_hb - neg_hb),
    )


def label_update_online(
    m: LabeledRbm,
    h_act: np.ndarray,
    user_label: int,
    lr: float,
):
    """Online label-weight update for one displayed sample.

    Strengthens connections from active features to the user's label and
    weakens them toward the reconstructed label probabilities, which are
    computed before the update. Returns (updated model, applied delta);
    the delta supports bitwise-exact undo. Base weights are untouched.
    """
    if not 0 <= user_label < m.n_labels:
        raise ValueError(f"label {user_label} out of range [0, {m.n_labels})")
    if lr <= 0:
        raise ValueError("lr must be positive")
    h_act = np.asarray(h_act, dtype=np.float64)
    if h_act.shape != (m.n_hidden,):
        raise ValueError(f"h_act shape {h_act.shape} != ({m.n_hidden},)")

    reconstructed = label_probs(m, h_act)
    target = np.zeros(m.n_labels)
    target[user_label] = 1.0
    coeff = lr * (target - reconstructed)
    d_weights = np.outer(coeff, h_act)
    d_bias = coeff

    updated = LabeledRbm(m.base, m.label_weights + d_weights, m.label_bias + d_bias)
    delta = LabelDelta(d_weights, d_bias, m.label_weights, m.label_bias)
    return updated, delta


def revert_label_update(m: LabeledRbm, delta: LabelDelta) -> LabeledRbm:
    """Undo a label update by restoring the delta's pre-update arrays."""
    return LabeledRbm(m.base, delta.prev_label_weights, delta.prev_label_bias)


def classify(m: LabeledRbm, image: np.ndarray):
    """Deterministic classification of one image.

    Clamps the image, takes hidden probabilities with label inputs zero,
    reconstructs label probabilities, and returns (argmax label, probs);
    ties break toward the lowest label index.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (m.n_visible,):
        raise ValueError(f"image shape {image.shape} != ({m.n_visible},)")
    h_act = hidden_probs(m.base, image)
    probs = label_probs(m, h_act)
    return int(np.argmax(probs)), probs


def batch_classify(m: LabeledRbm, images: np.ndarray):
    """Vectorized classify over rows of a 2-D image array."""
    images = np.atleast_2d(np.asarray(images, dtype=np.float64))
    if images.shape[1] != m.n_visible:
        raise ValueError(f"image width {images.shape[1]} != n_visible {m.n_visible}")
    h_act = hidden_probs(m.base, images)
    probs = label_probs(m, h_act)
    return np.argmax(probs, axis=1), probs


def reconstruction_error(m: RbmParams, v: np.ndarray, rng: np.random.Generator):
    """Sum of squared differences between v and its one-step reconstruction.

    The hidden state is sampled once; the visible side stays a probability
    vector to keep the metric low-variance. A 2-D input yields one error
    per row.
    """
    v = np.asarray(v, dtype=np.float64)
    h = sample_bernoulli(hidden_probs(m, v), rng)
    r = visible_probs(m, h)
    sq = (v - r) ** 2
    if v.ndim == 1:
        return float(sq.sum())
    return sq.sum(axis=1)
