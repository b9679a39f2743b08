"""Optimizer updates: SGD in closed form, Adam determinism, rejection."""

import numpy as np
import pytest

from slingdqn.nn import layers, optim


def _params(seed=0):
    specs = (layers.dense(3, 2), layers.relu(), layers.dense(2, 1))
    return specs, layers.init_params(specs, np.random.default_rng(seed), np.float64)


def _grads_like(params, seed=1):
    rng = np.random.default_rng(seed)
    return [[rng.standard_normal(p.shape) for p in layer] for layer in params]


def test_sgd_is_w_minus_lr_g_exactly():
    specs, params = _params()
    grads = _grads_like(params)
    state = optim.init_optimizer(optim.SGD, params)
    new, state2 = optim.apply_update(params, grads, state, 0.1)
    for lp, lg, ln in zip(params, grads, new):
        for p, g, n in zip(lp, lg, ln):
            assert np.array_equal(n, p - 0.1 * g)
    assert state2.step == 1


def test_zero_grads_leave_weights_unchanged_but_count_step():
    specs, params = _params()
    zeros = [[np.zeros_like(p) for p in layer] for layer in params]
    for kind in (optim.SGD, optim.ADAM):
        state = optim.init_optimizer(kind, params)
        new, state2 = optim.apply_update(params, zeros, state, 0.1)
        assert state2.step == 1
        for lp, ln in zip(params, new):
            for p, n in zip(lp, ln):
                assert np.array_equal(n, p)


def test_identical_update_sequences_are_bit_identical():
    def run():
        specs, params = _params(seed=7)
        state = optim.init_optimizer(optim.ADAM, params)
        for i in range(5):
            grads = _grads_like(params, seed=100 + i)
            params, state = optim.apply_update(params, grads, state, 1e-3)
        return params

    a, b = run(), run()
    for la, lb in zip(a, b):
        for pa, pb in zip(la, lb):
            assert np.array_equal(pa, pb)


def test_adam_first_step_moves_by_lr_signwise():
    # With zero moments, the first bias-corrected Adam step is
    # lr * g / (|g| + eps) ~= lr * sign(g).
    params = [[np.zeros((4,))]]
    grads = [[np.array([2.0, -3.0, 0.5, -0.1])]]
    state = optim.init_optimizer(optim.ADAM, params)
    new, _ = optim.apply_update(params, grads, state, 0.01)
    assert np.allclose(new[0][0], -0.01 * np.sign(grads[0][0]), atol=1e-6)


def test_non_finite_gradient_rejected():
    specs, params = _params()
    grads = _grads_like(params)
    grads[0][0][0, 0] = np.nan
    state = optim.init_optimizer(optim.SGD, params)
    with pytest.raises(ValueError, match="non-finite"):
        optim.apply_update(params, grads, state, 0.1)


def test_shape_disagreement_rejected():
    specs, params = _params()
    grads = _grads_like(params)
    grads[0][0] = grads[0][0][:, :1]
    state = optim.init_optimizer(optim.SGD, params)
    with pytest.raises(ValueError):
        optim.apply_update(params, grads, state, 0.1)


def test_adam_accumulator_shapes_mirror_weights():
    specs, params = _params()
    state = optim.init_optimizer(optim.ADAM, params)
    for lp, lm, lv in zip(params, state.m, state.v):
        assert [p.shape for p in lp] == [m.shape for m in lm] == [v.shape for v in lv]
