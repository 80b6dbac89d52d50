from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semslice import nn


def random_net(rng, sizes, acts, bias_scale=0.5):
    params = nn.init_params(sizes, acts, rng)
    # nonzero biases keep probe points off relu kinks
    return params.with_arrays([a if i % 2 == 0 else rng.normal(0.0, bias_scale, a.shape)
                               for i, a in enumerate(params.arrays())])


class TestParamSet:
    def test_shapes_must_chain(self, rng):
        with pytest.raises(ValueError):
            nn.ParamSet([2, 3], [np.zeros((3, 2))], [np.zeros(3)], ["relu"])

    def test_softmax_only_last(self, rng):
        with pytest.raises(ValueError, match="final"):
            nn.init_params([2, 3, 2], ["softmax", "identity"], rng)

    def test_unknown_activation(self, rng):
        with pytest.raises(ValueError):
            nn.init_params([2, 2], ["gelu"], rng)

    def test_glorot_bounds(self, rng):
        p = nn.init_params([30, 20], ["identity"], rng)
        limit = np.sqrt(6.0 / 50)
        assert np.all(np.abs(p.weights[0]) <= limit)
        assert np.all(p.biases[0] == 0)

    def test_adam_state_validation(self):
        with pytest.raises(ValueError):
            nn.AdamState([], [], beta1=1.0)
        with pytest.raises(ValueError):
            nn.AdamState([], [], epsilon=0.0)


class TestForward:
    def test_identity_layer(self):
        p = nn.ParamSet([2, 2], [np.eye(2)], [np.zeros(2)], ["identity"])
        out, _ = nn.forward(p, [1.0, 2.0])
        np.testing.assert_array_equal(out, [1.0, 2.0])

    def test_softmax_symmetric_logits(self):
        p = nn.ParamSet([1, 3], [np.zeros((1, 3))], [np.zeros(3)], ["softmax"])
        out, _ = nn.forward(p, [5.0])
        np.testing.assert_allclose(out, [1 / 3] * 3, rtol=0, atol=1e-15)

    def test_relu(self):
        p = nn.ParamSet([2, 2], [np.eye(2)], [np.zeros(2)], ["relu"])
        out, _ = nn.forward(p, [-1.0, 2.0])
        np.testing.assert_array_equal(out, [0.0, 2.0])

    def test_shape_mismatch(self, rng):
        p = nn.init_params([3, 2], ["tanh"], rng)
        with pytest.raises(ValueError):
            nn.forward(p, np.ones(4))

    def test_batch_matches_rows(self, rng):
        p = nn.init_params([3, 5, 2], ["tanh", "logistic"], rng)
        x = rng.standard_normal((4, 3))
        batch, _ = nn.forward(p, x)
        for i in range(4):
            row, _ = nn.forward(p, x[i])
            np.testing.assert_allclose(batch[i], row, rtol=0, atol=1e-15)

    def test_logistic_extremes_finite(self):
        z = np.array([-1000.0, 0.0, 1000.0])
        np.testing.assert_array_equal(nn.logistic(z), [0.0, 0.5, 1.0])

    @given(st.lists(st.floats(-300, 300), min_size=1, max_size=8))
    def test_softmax_sums_to_one(self, logits):
        p = nn.softmax(np.array(logits))
        assert abs(p.sum() - 1.0) < 1e-12
        assert np.all(p > 0)


class TestBackward:
    def test_linear_by_hand(self):
        p = nn.ParamSet([1, 1], [np.array([[2.0]])], [np.zeros(1)], ["identity"])
        _, cache = nn.forward(p, [3.0])
        g = nn.backward(p, cache, [1.0])
        assert g.weights[0][0, 0] == 3.0
        assert g.biases[0][0] == 1.0
        assert g.input[0] == 2.0

    def test_zero_upstream(self, rng):
        p = nn.init_params([3, 4, 2], ["tanh", "identity"], rng)
        _, cache = nn.forward(p, rng.standard_normal(3))
        g = nn.backward(p, cache, np.zeros(2))
        assert all(np.all(a == 0) for a in g.arrays())

    def test_mismatched_cache(self, rng):
        a = nn.init_params([3, 4, 2], ["tanh", "identity"], rng)
        b = nn.init_params([3, 5, 2], ["tanh", "identity"], rng)
        _, cache = nn.forward(a, np.ones(3))
        with pytest.raises(ValueError):
            nn.backward(b, cache, np.ones(2))

    def test_tanh_4_8_3(self, rng):
        p = random_net(rng, [4, 8, 3], ["tanh", "tanh"])
        assert nn.grad_check(p, rng.standard_normal((5, 4)), h=1e-6) < 1e-4


class TestGradCheck:
    def test_linear_quadratic_exact(self, rng):
        p = random_net(rng, [4, 3], ["identity"])
        assert nn.grad_check(p, rng.standard_normal((6, 4)), loss_tag="quadratic") < 1e-8

    def test_deep_linear_quadratic(self, rng):
        p = random_net(rng, [3, 5, 2], ["identity", "identity"])
        assert nn.grad_check(p, rng.standard_normal((4, 3)), loss_tag="quadratic") < 1e-8

    def test_linear_sum_exact(self, rng):
        p = random_net(rng, [5, 2], ["identity"])
        assert nn.grad_check(p, rng.standard_normal((3, 5)), loss_tag="sum") < 1e-8

    def test_stubbed_backward_detected(self, rng):
        p = random_net(rng, [3, 4, 2], ["tanh", "identity"])

        def zeros(params, cache, g):
            real = nn.backward(params, cache, g)
            return nn.GradientSet([np.zeros_like(w) for w in real.weights],
                                  [np.zeros_like(b) for b in real.biases], real.input)

        err = nn.grad_check(p, rng.standard_normal((2, 3)), backward_fn=zeros)
        assert err == pytest.approx(1.0)

    def test_three_layer(self, rng):
        p = random_net(rng, [5, 6, 6, 3], ["relu", "tanh", "softmax"])
        assert nn.grad_check(p, rng.standard_normal((4, 5))) < 1e-4

    def test_bad_h(self, rng):
        with pytest.raises(ValueError):
            nn.grad_check(nn.init_params([1, 1], ["identity"], rng), [1.0], h=0.0)

    @pytest.mark.parametrize("seed", range(60))
    def test_random_architectures(self, seed):
        rng = np.random.default_rng(1000 + seed)
        depth = 1 + seed % 3
        sizes = [int(v) for v in rng.integers(1, 7, size=depth + 1)]
        acts = [nn.ACTIVATIONS[(seed + i) % 4] for i in range(depth)]
        if seed % 4 == 0 and sizes[-1] > 1:
            acts[-1] = "softmax"
        p = random_net(rng, sizes, acts)
        assert nn.grad_check(p, rng.standard_normal((3, sizes[0])), h=1e-6, seed=seed) < 1e-4

    def test_every_activation_covered(self):
        covered = set()
        for seed in range(60):
            depth = 1 + seed % 3
            covered |= {nn.ACTIVATIONS[(seed + i) % 4] for i in range(depth)}
        assert covered | {"softmax"} == set(nn.ACTIVATIONS)


class TestAdam:
    def test_zero_lr_identity(self, rng):
        p = nn.init_params([3, 2], ["tanh"], rng)
        g = [np.ones_like(a) for a in p.arrays()]
        q, state = nn.adam_update(p, g, nn.adam_init(p), 0.0)
        for a, b in zip(p.arrays(), q.arrays()):
            np.testing.assert_array_equal(a, b)
        assert state.step_count == 1

    def test_first_step_moves_by_lr(self, rng):
        p = nn.init_params([3, 2], ["tanh"], rng)
        g = [np.full_like(a, -0.37) for a in p.arrays()]
        q, _ = nn.adam_update(p, g, nn.adam_init(p), 1e-3)
        for a, b in zip(p.arrays(), q.arrays()):
            np.testing.assert_allclose(b - a, 1e-3, rtol=1e-6)

    def test_pure(self, rng):
        p = nn.init_params([3, 2], ["tanh"], rng)
        g = [rng.standard_normal(a.shape) for a in p.arrays()]
        s = nn.adam_init(p)
        q1, s1 = nn.adam_update(p, g, s, 0.01)
        q2, s2 = nn.adam_update(p, g, s, 0.01)
        for a, b in zip(q1.arrays() + s1.first_moment, q2.arrays() + s2.first_moment):
            np.testing.assert_array_equal(a, b)
        assert s.step_count == 0

    def test_nonfinite_gradient(self, rng):
        p = nn.init_params([2, 1], ["identity"], rng)
        g = [np.full_like(a, np.nan) for a in p.arrays()]
        with pytest.raises(FloatingPointError):
            nn.adam_update(p, g, nn.adam_init(p), 0.1)

    def test_shape_mismatch(self, rng):
        p = nn.init_params([2, 1], ["identity"], rng)
        with pytest.raises(ValueError):
            nn.adam_update(p, [np.zeros(3)], nn.adam_init(p), 0.1)


class TestSoftUpdate:
    @pytest.fixture
    def pair(self):
        t = nn.ParamSet([1, 1], [np.zeros((1, 1))], [np.zeros(1)], ["identity"])
        o = nn.ParamSet([1, 1], [np.full((1, 1), 2.0)], [np.full(1, 2.0)], ["identity"])
        return t, o

    def test_tau_one_copies(self, pair):
        t, o = pair
        for a, b in zip(nn.soft_update(t, o, 1.0).arrays(), o.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_tau_zero_keeps(self, pair):
        t, o = pair
        for a, b in zip(nn.soft_update(t, o, 0.0).arrays(), t.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_half(self, pair):
        t, o = pair
        assert nn.soft_update(t, o, 0.5).weights[0][0, 0] == 1.0

    def test_architecture_mismatch(self, rng):
        with pytest.raises(ValueError):
            nn.soft_update(nn.init_params([2, 3], "tanh", rng), nn.init_params([2, 4], "tanh", rng), 0.1)

    def test_tau_range(self, pair):
        with pytest.raises(ValueError):
            nn.soft_update(*pair, 1.5)

    @settings(max_examples=50)
    @given(st.floats(0.0, 1.0))
    def test_twice_equals_compound_blend(self, tau):
        rng = np.random.default_rng(3)
        t = nn.init_params([3, 2], "tanh", rng)
        o = nn.init_params([3, 2], "tanh", rng)
        twice = nn.soft_update(nn.soft_update(t, o, tau), o, tau)
        once = nn.soft_update(t, o, 1.0 - (1.0 - tau) ** 2)
        for a, b in zip(twice.arrays(), once.arrays()):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
