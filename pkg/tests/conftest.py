import numpy as np
import pytest

from postlabel.rbm import LabeledRbm, RbmParams


def random_rbm(rng, n_visible, n_hidden, scale=0.5) -> RbmParams:
    return RbmParams(
        rng.normal(0, scale, size=(n_visible, n_hidden)),
        rng.normal(0, scale, size=n_visible),
        rng.normal(0, scale, size=n_hidden),
    )


def random_labeled_rbm(rng, n_visible, n_hidden, n_labels, scale=0.5) -> LabeledRbm:
    return LabeledRbm(
        random_rbm(rng, n_visible, n_hidden, scale),
        rng.normal(0, scale, size=(n_labels, n_hidden)),
        rng.normal(0, scale, size=n_labels),
    )


class StubRng:
    """Deterministic stand-in for a Generator: serves preset uniforms in order."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, shape=None):
        if shape is None:
            return self.values.pop(0)
        n = int(np.prod(shape))
        out = np.array([self.values.pop(0) for _ in range(n)], dtype=np.float64)
        return out.reshape(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
