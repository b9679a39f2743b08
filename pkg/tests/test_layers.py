"""Forward/backward passes of the layer stack."""

import numpy as np
import pytest

from slingdqn.nn import layers

from _reference import naive_conv2d


def _rand(shape, seed=0, dtype=np.float64):
    return np.random.default_rng(seed).standard_normal(shape).astype(dtype)


def _three_layer_net(seed=0, dtype=np.float64):
    # 8x8x2 -> conv3x3s2 -> 3x3x4 -> conv2x2s1 -> 2x2x3 -> dense -> 5
    specs = (
        layers.conv((3, 3), (2, 2), 2, 4),
        layers.relu(),
        layers.conv((2, 2), (1, 1), 4, 3),
        layers.flatten(),
        layers.dense(2 * 2 * 3, 5),
    )
    params = layers.init_params(specs, np.random.default_rng(seed), dtype)
    return specs, params


class TestForward:
    def test_dense_identity_weights_passes_input_through(self):
        specs = (layers.dense(4, 4),)
        params = [[np.eye(4), np.zeros(4)]]
        v = _rand((3, 4), seed=1)
        y, _ = layers.forward(specs, params, v)
        assert np.array_equal(y, v)

    def test_conv_8x8_stride4_output_is_20x20(self):
        specs = (layers.conv((8, 8), (4, 4), 3, 5),)
        params = layers.init_params(specs, np.random.default_rng(0))
        x = _rand((1, 84, 84, 3), dtype=np.float32)
        y, _ = layers.forward(specs, params, x)
        assert y.shape == (1, 20, 20, 5)

    def test_three_layer_net_matches_naive_reference(self):
        specs, params = _three_layer_net(seed=2)
        x = _rand((2, 8, 8, 2), seed=3)
        y, _ = layers.forward(specs, params, x)

        h = naive_conv2d(x, params[0][0], params[0][1], (2, 2))
        h = np.maximum(h, 0.0)
        h = naive_conv2d(h, params[2][0], params[2][1], (1, 1))
        h = h.reshape(2, -1)
        want = h @ params[4][0] + params[4][1]
        assert np.allclose(y, want, atol=1e-6)

    def test_shape_mismatch_names_the_layer(self):
        specs, params = _three_layer_net()
        with pytest.raises(layers.ShapeError, match="layer 0"):
            layers.forward(specs, params, _rand((1, 8, 8, 3)))

    def test_kernel_too_large_rejected(self):
        specs = (layers.conv((7, 7), (1, 1), 2, 3),)
        params = layers.init_params(specs, np.random.default_rng(0))
        with pytest.raises(layers.ShapeError, match="does not fit"):
            layers.forward(specs, params, _rand((1, 4, 4, 2)))

    def test_batching_is_transparent(self):
        """Row k of a size-k batch equals a size-1 forward of that row."""
        specs, params = _three_layer_net(seed=4)
        x = _rand((5, 8, 8, 2), seed=5)
        y_batch, _ = layers.forward(specs, params, x)
        for k in range(5):
            y_one, _ = layers.forward(specs, params, x[k : k + 1])
            assert np.allclose(y_batch[k], y_one[0], atol=1e-12)

    def test_forward_is_pure(self):
        specs, params = _three_layer_net(seed=6)
        x = _rand((2, 8, 8, 2), seed=7)
        y1, _ = layers.forward(specs, params, x)
        y2, _ = layers.forward(specs, params, x)
        assert np.array_equal(y1, y2)

    def test_all_outputs_finite_at_init(self):
        specs, params = _three_layer_net(seed=8)
        x = _rand((4, 8, 8, 2), seed=9)
        y, cache = layers.forward(specs, params, x)
        assert np.all(np.isfinite(y))


class TestBackward:
    def test_zero_output_grad_gives_zero_param_grads(self):
        specs, params = _three_layer_net(seed=1)
        x = _rand((2, 8, 8, 2), seed=2)
        y, cache = layers.forward(specs, params, x)
        grads, gx = layers.backward(specs, params, cache, np.zeros_like(y))
        assert not np.any(gx)
        for layer in grads:
            for g in layer:
                assert not np.any(g)

    def test_relu_negative_preactivation_blocks_gradient(self):
        specs = (layers.relu(),)
        params = [[]]
        x = np.array([[-1.0, 2.0, -3.0]])
        y, cache = layers.forward(specs, params, x)
        grads, gx = layers.backward(specs, params, cache, np.ones_like(y))
        assert np.array_equal(gx, [[0.0, 1.0, 0.0]])

    def test_grads_match_finite_differences(self):
        """Scalar-output net: exact reverse mode vs central differences."""
        specs = (
            layers.conv((3, 3), (1, 1), 1, 2),
            layers.relu(),
            layers.flatten(),
            layers.dense(2 * 4 * 4, 1),
        )
        params = layers.init_params(specs, np.random.default_rng(3), np.float64)
        x = _rand((1, 6, 6, 1), seed=4)

        y, cache = layers.forward(specs, params, x)
        grads, _ = layers.backward(specs, params, cache, np.ones_like(y))

        step = 1e-4
        worst = 0.0
        for li, layer in enumerate(params):
            for pi, p in enumerate(layer):
                for k in range(p.size):
                    orig = p.flat[k]
                    p.flat[k] = orig + step
                    lp = float(layers.forward(specs, params, x)[0].sum())
                    p.flat[k] = orig - step
                    lm = float(layers.forward(specs, params, x)[0].sum())
                    p.flat[k] = orig
                    numeric = (lp - lm) / (2 * step)
                    analytic = grads[li][pi].flat[k]
                    denom = max(abs(numeric), abs(analytic), 1e-8)
                    worst = max(worst, abs(numeric - analytic) / denom)
        assert worst < 1e-5

    def test_mismatched_cache_rejected(self):
        specs, params = _three_layer_net(seed=5)
        other_specs = (layers.relu(),)
        x = _rand((2, 8, 8, 2), seed=6)
        y, cache = layers.forward(specs, params, x)
        with pytest.raises(layers.ShapeError):
            layers.backward(other_specs, [[]], cache, np.ones((2, 5)))
        with pytest.raises(layers.ShapeError):
            layers.backward(specs, params, cache, np.ones((2, 6)))

    def test_param_grad_shapes_mirror_weights(self):
        specs, params = _three_layer_net(seed=7)
        x = _rand((2, 8, 8, 2), seed=8)
        y, cache = layers.forward(specs, params, x)
        grads, _ = layers.backward(specs, params, cache, np.ones_like(y))
        for lp, lg in zip(params, grads):
            assert [p.shape for p in lp] == [g.shape for g in lg]


class TestDuelingLayer:
    def _dueling_forward(self, h, params):
        specs = (layers.dueling_split(h.shape[1], 3),)
        return layers.forward(specs, [params], h)

    def test_constant_advantage_cancels(self):
        """If every advantage equals c, q reduces to the value stream."""
        d = 4
        h = _rand((2, d), seed=1)
        vw, vb = _rand((d, 1), seed=2), np.array([0.3])
        aw = np.zeros((d, 3))
        ab = np.full(3, 7.5)  # constant advantage c
        q, _ = self._dueling_forward(h, [vw, vb, aw, ab])
        v = h @ vw + vb
        assert np.allclose(q, np.repeat(v, 3, axis=1), atol=1e-12)

    def test_hand_evaluated_merge(self):
        """V=2 with advantages [1,2,3] merges to q=[1,2,3]."""
        vw = np.zeros((2, 1))
        vb = np.array([2.0])
        aw = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
        ab = np.zeros(3)
        h = np.array([[1.0, 0.0]])
        q, _ = self._dueling_forward(h, [vw, vb, aw, ab])
        assert np.allclose(q, [[1.0, 2.0, 3.0]], atol=1e-12)

    def test_merge_identity_mean_q_minus_v_is_zero(self):
        d = 6
        rng = np.random.default_rng(3)
        params = [
            rng.standard_normal((d, 1)),
            rng.standard_normal(1),
            rng.standard_normal((d, 3)),
            rng.standard_normal(3),
        ]
        h = _rand((50, d), seed=4)
        specs = (layers.dueling_split(d, 3),)
        q, cache = layers.forward(specs, [params], h)
        v = cache.entries[0][1]
        assert np.max(np.abs(np.mean(q - v, axis=1))) < 1e-5
