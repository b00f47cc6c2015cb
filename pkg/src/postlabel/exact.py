"""Exact enumeration oracles for tiny RBMs (partition function, expectations).

Everything here is exponential in the unit count and guarded by a hard
size bound; these routines exist to validate the sampling-based training
code, not to train anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .rbm import RbmParams, hidden_probs

ENUMERATION_BOUND = 20  # max n_visible + n_hidden


@dataclass(frozen=True)
class RbmGradient:
    """Log-likelihood gradient, same layout as RbmParams."""

    d_weights: np.ndarray
    d_visible_bias: np.ndarray
    d_hidden_bias: np.ndarray

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.d_weights.ravel(), self.d_visible_bias, self.d_hidden_bias]
        )


def all_binary_states(n: int) -> np.ndarray:
    """All 2^n binary vectors of length n, one per row; bit i of the row
    index gives component i."""
    if n < 0:
        raise ValueError("n must be non-negative")
    idx = np.arange(2 ** n, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)


def _check_bound(m: RbmParams) -> None:
    total = m.n_visible + m.n_hidden
    if total > ENUMERATION_BOUND:
        raise ValueError(
            f"model has {total} units, enumeration bound is {ENUMERATION_BOUND}"
        )


def _log_unnorm_visible(m: RbmParams, states: np.ndarray) -> np.ndarray:
    """log sum_h e^{-E(v, h)} for each visible row, hidden units summed out
    analytically per unit."""
    pre = states @ m.weights + m.hidden_bias
    return states @ m.visible_bias + np.logaddexp(0.0, pre).sum(axis=1)


def exact_log_partition(m: RbmParams) -> float:
    """log Z over all joint states, accumulated with log-sum-exp."""
    _check_bound(m)
    states = all_binary_states(m.n_visible)
    return float(logsumexp(_log_unnorm_visible(m, states)))


def exact_partition(m: RbmParams) -> float:
    """Z = sum over all 2^(n_visible+n_hidden) states of e^{-E(v, h)}."""
    return float(np.exp(exact_log_partition(m)))


def exact_visible_marginal(m: RbmParams):
    """All visible states and their exact probabilities P(v)."""
    _check_bound(m)
    states = all_binary_states(m.n_visible)
    return states, softmax(_log_unnorm_visible(m, states))


@dataclass(frozen=True)
class ModelExpectations:
    """Exact model-side moments from full enumeration."""

    vh: np.ndarray  # E[v_i h_j], shape (n_visible, n_hidden)
    v: np.ndarray   # E[v_i]
    h: np.ndarray   # E[h_j]


def exact_model_expectations(m: RbmParams) -> ModelExpectations:
    states, p = exact_visible_marginal(m)
    h_cond = hidden_probs(m, states)                # E[h_j | v] rows
    vh = states.T @ (p[:, None] * h_cond)
    return ModelExpectations(vh=vh, v=p @ states, h=p @ h_cond)


def exact_loglik_gradient(m: RbmParams, data: np.ndarray) -> RbmGradient:
    """Exact gradient of the mean data log-likelihood.

    Data statistics pair each vector with its hidden probabilities; model
    statistics come from full enumeration weighted by e^{-E}/Z.
    """
    _check_bound(m)
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("data is empty")
    if data.shape[1] != m.n_visible:
        raise ValueError(f"data width {data.shape[1]} != n_visible {m.n_visible}")

    h_data = hidden_probs(m, data)
    n = data.shape[0]
    pos_w = data.T @ h_data / n
    pos_vb = data.mean(axis=0)
    pos_hb = h_data.mean(axis=0)

    model = exact_model_expectations(m)
    return RbmGradient(
        d_weights=pos_w - model.vh,
        d_visible_bias=pos_vb - model.v,
        d_hidden_bias=pos_hb - model.h,
    )
