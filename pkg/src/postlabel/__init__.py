"""Classification RBMs trained by labeling live model samples."""

from .rbm import (
    LabeledRbm,
    LabelDelta,
    RbmParams,
    batch_classify,
    cd_update,
    classify,
    energy,
    gibbs_step,
    hidden_probs,
    hidden_probs_labeled,
    init_rbm,
    label_probs,
    label_update_online,
    reconstruction_error,
    revert_label_update,
    sample_bernoulli,
    sigmoid,
    visible_probs,
    with_labels,
)

__all__ = [
    "LabeledRbm",
    "LabelDelta",
    "RbmParams",
    "batch_classify",
    "cd_update",
    "classify",
    "energy",
    "gibbs_step",
    "hidden_probs",
    "hidden_probs_labeled",
    "init_rbm",
    "label_probs",
    "label_update_online",
    "reconstruction_error",
    "revert_label_update",
    "sample_bernoulli",
    "sigmoid",
    "visible_probs",
    "with_labels",
]
