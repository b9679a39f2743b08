"""grad_check behaviour: analytic quadratics, full architecture, flags."""

import numpy as np

from slingdqn import qnet
from slingdqn.nn import gradcheck, layers


def _sum_loss(y):
    return float(y.sum()), np.ones_like(y)


def _quadratic_loss(y):
    return float((y**2).sum()), 2.0 * y


def test_linear_net_quadratic_loss_is_machine_exact():
    """d/dw of (xw)^2 is analytic; double-precision error < 1e-10."""
    specs = (layers.dense(4, 3),)
    params = layers.init_params(specs, np.random.default_rng(0), np.float64)
    x = np.random.default_rng(1).standard_normal((5, 4))
    res = gradcheck.grad_check(specs, params, x, _quadratic_loss, n_samples=15)
    assert not res.degenerate
    assert res.max_rel_error < 1e-10


def test_single_conv_layer_below_1e5():
    specs = (layers.conv((3, 3), (2, 2), 2, 4),)
    params = layers.init_params(specs, np.random.default_rng(2), np.float64)
    x = np.random.default_rng(3).standard_normal((2, 9, 9, 2))
    res = gradcheck.grad_check(specs, params, x, _sum_loss, n_samples=60)
    assert res.max_rel_error < 1e-5


def test_full_architecture_below_1e5():
    net = qnet.build_network(0, conv_filters=(4, 8, 8, 16), dtype=np.float64)
    x = np.random.default_rng(4).standard_normal((1,) + qnet.STATE_SHAPE)
    res = gradcheck.grad_check(net.specs, net.params, x, _quadratic_loss, n_samples=120)
    assert not res.degenerate
    assert res.max_rel_error < 1e-5


def test_degenerate_all_zero_gradients_flagged():
    # A loss that ignores the output has identically zero gradients.
    specs = (layers.dense(3, 2),)
    params = layers.init_params(specs, np.random.default_rng(5), np.float64)
    x = np.random.default_rng(6).standard_normal((2, 3))
    res = gradcheck.grad_check(
        specs, params, x, lambda y: (1.0, np.zeros_like(y)), n_samples=8
    )
    assert res.degenerate
    assert res.max_rel_error == 0.0


def test_samples_cover_requested_count():
    specs = (layers.dense(10, 10),)
    params = layers.init_params(specs, np.random.default_rng(7), np.float64)
    x = np.random.default_rng(8).standard_normal((2, 10))
    res = gradcheck.grad_check(specs, params, x, _sum_loss, n_samples=50)
    assert res.n_checked >= 50
