import itertools
import math

import numpy as np
import pytest

from postlabel.exact import (
    all_binary_states,
    exact_log_partition,
    exact_loglik_gradient,
    exact_model_expectations,
    exact_partition,
    exact_visible_marginal,
)
from postlabel.rbm import RbmParams, gibbs_step, hidden_probs

from conftest import random_rbm


def naive_energy(w, b, c, v, h):
    acc = 0.0
    for i in range(len(v)):
        for j in range(len(h)):
            acc -= v[i] * h[j] * w[i][j]
    for i in range(len(v)):
        acc -= v[i] * b[i]
    for j in range(len(h)):
        acc -= h[j] * c[j]
    return acc


def naive_partition(m):
    """Brute-force double loop over every (v, h) joint state."""
    z = 0.0
    for v in itertools.product((0.0, 1.0), repeat=m.n_visible):
        for h in itertools.product((0.0, 1.0), repeat=m.n_hidden):
            z += math.exp(-naive_energy(m.weights, m.visible_bias, m.hidden_bias, v, h))
    return z


class TestPartition:
    def test_zero_2x2_is_16(self):
        m = RbmParams(np.zeros((2, 2)), np.zeros(2), np.zeros(2))
        assert exact_partition(m) == pytest.approx(16.0, rel=1e-12)

    @pytest.mark.parametrize("nv,nh", [(1, 1), (3, 2), (4, 5)])
    def test_zero_model_is_power_of_two(self, nv, nh):
        m = RbmParams(np.zeros((nv, nh)), np.zeros(nv), np.zeros(nh))
        assert exact_partition(m) == pytest.approx(2.0 ** (nv + nh), rel=1e-12)

    def test_matches_naive_double_loop(self, rng):
        m = random_rbm(rng, 3, 2)
        assert exact_partition(m) == pytest.approx(naive_partition(m), rel=1e-10)

    def test_log_partition_is_overflow_safe(self):
        m = RbmParams(np.full((3, 3), 300.0), np.zeros(3), np.zeros(3))
        logz = exact_log_partition(m)
        assert math.isfinite(logz)
        # dominated by the all-ones state: -E = 9 * 300
        assert logz == pytest.approx(2700.0, rel=1e-3)

    def test_bound_enforced(self, rng):
        m = random_rbm(rng, 12, 9)
        with pytest.raises(ValueError):
            exact_partition(m)


class TestNormalizationAndConditionals:
    def test_joint_probabilities_sum_to_one(self, rng):
        m = random_rbm(rng, 3, 3)
        z = exact_partition(m)
        total = naive_partition(m) / z
        assert abs(total - 1.0) < 1e-10

    def test_hidden_probs_match_enumeration_conditional(self, rng):
        # P(h_j=1 | v) = sum_{h: h_j=1} e^{-E} / sum_h e^{-E}
        for _ in range(5):
            m = random_rbm(rng, 3, 3, scale=1.0)
            v = rng.integers(0, 2, size=3).astype(float)
            probs = hidden_probs(m, v)
            for j in range(3):
                num = den = 0.0
                for h in itertools.product((0.0, 1.0), repeat=3):
                    w = math.exp(
                        -naive_energy(m.weights, m.visible_bias, m.hidden_bias, v, h)
                    )
                    den += w
                    if h[j] == 1.0:
                        num += w
                assert abs(probs[j] - num / den) < 1e-10

    def test_visible_marginal_matches_enumeration(self, rng):
        m = random_rbm(rng, 3, 2)
        states, p = exact_visible_marginal(m)
        z = naive_partition(m)
        for row, prob in zip(states, p):
            unnorm = 0.0
            for h in itertools.product((0.0, 1.0), repeat=2):
                unnorm += math.exp(
                    -naive_energy(m.weights, m.visible_bias, m.hidden_bias, row, h)
                )
            assert abs(prob - unnorm / z) < 1e-10


class TestModelExpectations:
    def test_matches_naive_sums(self, rng):
        m = random_rbm(rng, 3, 2, scale=0.8)
        ex = exact_model_expectations(m)
        z = naive_partition(m)
        vh = np.zeros((3, 2))
        ev = np.zeros(3)
        eh = np.zeros(2)
        for v in itertools.product((0.0, 1.0), repeat=3):
            for h in itertools.product((0.0, 1.0), repeat=2):
                p = math.exp(
                    -naive_energy(m.weights, m.visible_bias, m.hidden_bias, v, h)
                ) / z
                for i in range(3):
                    ev[i] += p * v[i]
                    for j in range(2):
                        vh[i, j] += p * v[i] * h[j]
                for j in range(2):
                    eh[j] += p * h[j]
        np.testing.assert_allclose(ex.vh, vh, atol=1e-10)
        np.testing.assert_allclose(ex.v, ev, atol=1e-10)
        np.testing.assert_allclose(ex.h, eh, atol=1e-10)


class TestLoglikGradient:
    def test_zero_model_all_zero_data(self):
        m = RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
        g = exact_loglik_gradient(m, np.zeros((1, 3)))
        # data term: <v_i h_j> = 0; model term: 0.5 * 0.5 = 0.25
        np.testing.assert_allclose(g.d_weights, -0.25 * np.ones((3, 2)), atol=1e-12)
        np.testing.assert_allclose(g.d_visible_bias, -0.5 * np.ones(3), atol=1e-12)
        np.testing.assert_allclose(g.d_hidden_bias, np.zeros(2), atol=1e-12)

    def test_visible_bias_component_matches_enumeration(self, rng):
        m = random_rbm(rng, 4, 3, scale=0.7)
        data = rng.integers(0, 2, size=(6, 4)).astype(float)
        g = exact_loglik_gradient(m, data)
        states, p = exact_visible_marginal(m)
        model_v = p @ states
        np.testing.assert_allclose(
            g.d_visible_bias, data.mean(axis=0) - model_v, atol=1e-10
        )

    def test_gradient_vanishes_on_model_samples(self):
        # data drawn from the exact model distribution -> gradient ~ 0
        rng = np.random.default_rng(31)
        m = random_rbm(rng, 3, 2, scale=0.6)
        states, p = exact_visible_marginal(m)
        n = 40_000
        idx = rng.choice(len(states), size=n, p=p)
        data = states[idx]
        g = exact_loglik_gradient(m, data)
        # each component is an empirical mean of terms bounded in [0, 1]
        bound = 3 * 0.5 / math.sqrt(n)
        assert np.abs(g.flatten()).max() < bound

    def test_bound_enforced(self, rng):
        m = random_rbm(rng, 15, 6)
        with pytest.raises(ValueError):
            exact_loglik_gradient(m, np.zeros((1, 15)))


class TestChainConsistency:
    def test_long_chain_matches_enumeration(self):
        # CD-infinity: time averages of v_i * P(h_j|v) over a long Gibbs
        # chain agree with enumeration expectations within 3 batch-means SE.
        rng = np.random.default_rng(12345)
        m = random_rbm(rng, 3, 2, scale=0.8)
        ex = exact_model_expectations(m)

        chain_rng = np.random.default_rng(777)
        v = np.zeros(3)
        burn_in, n_steps = 1_000, 100_000
        for _ in range(burn_in):
            v, _, _ = gibbs_step(m, v, chain_rng)

        n_batches, batch = 100, n_steps // 100
        batch_means = np.zeros((n_batches, 3, 2))
        for bi in range(n_batches):
            acc = np.zeros((3, 2))
            for _ in range(batch):
                v, _, _ = gibbs_step(m, v, chain_rng)
                acc += np.outer(v, hidden_probs(m, v))
            batch_means[bi] = acc / batch

        mean = batch_means.mean(axis=0)
        se = batch_means.std(axis=0, ddof=1) / math.sqrt(n_batches)
        assert np.all(np.abs(mean - ex.vh) < 3 * se + 1e-12)


class TestStateEnumeration:
    def test_all_states_unique_and_complete(self):
        states = all_binary_states(4)
        assert states.shape == (16, 4)
        assert len({tuple(row) for row in states}) == 16
        assert set(np.unique(states)) == {0.0, 1.0}
