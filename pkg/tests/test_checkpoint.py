"""Checkpoint round-trips must be bit-exact."""

import numpy as np

from slingdqn import qnet
from slingdqn.nn import checkpoint, layers, optim


def test_round_trip_is_bit_exact(tmp_path):
    net = qnet.build_network(3, conv_filters=(4, 8, 8, 16))
    opt = optim.init_optimizer(optim.ADAM, net.params)
    grads = [[np.full_like(p, 0.125) for p in layer] for layer in net.params]
    params2, opt2 = optim.apply_update(net.params, grads, opt, 1e-3)

    path = tmp_path / "net.json"
    checkpoint.save(path, net.specs, params2, opt_state=opt2, step=17,
                    agent_config=qnet.AgentConfig().to_dict())
    loaded = checkpoint.load(path)

    assert loaded.step == 17
    assert loaded.specs == net.specs
    for la, lb in zip(params2, loaded.params):
        for a, b in zip(la, lb):
            assert a.dtype == b.dtype
            assert np.array_equal(a, b)
    for la, lb in zip(opt2.m, loaded.opt_state.m):
        for a, b in zip(la, lb):
            assert np.array_equal(a, b)
    assert loaded.opt_state.step == opt2.step


def test_q_values_identical_after_round_trip(tmp_path):
    net = qnet.build_network(11, conv_filters=(4, 8, 8, 16))
    path = tmp_path / "net.json"
    qnet.save_network(path, net, step=0)
    loaded, _, _, _ = qnet.load_network(path)
    x = np.random.default_rng(0).standard_normal(qnet.STATE_SHAPE).astype(np.float32)
    assert np.array_equal(net.q_values(x), loaded.q_values(x))


def test_header_carries_dimension_flow_and_config(tmp_path):
    net = qnet.build_network(5, conv_filters=(4, 8, 8, 16))
    path = tmp_path / "net.json"
    qnet.save_network(path, net, step=2, agent_config=qnet.AgentConfig(gamma=0.5))
    loaded = checkpoint.load(path)
    assert "dimension_flow" in loaded.header
    assert "84x84x3" in loaded.header["dimension_flow"]
    assert loaded.agent_config["gamma"] == 0.5
    cfg = qnet.AgentConfig.from_dict(loaded.agent_config)
    assert cfg.gamma == 0.5


def test_float64_tensors_round_trip(tmp_path):
    specs = (layers.dense(3, 2),)
    params = [[np.array([[1e-17, np.pi, -2.5], [1.0 / 3.0, 7e300, 5e-324]]).T,
               np.array([0.1, 0.2])]]
    path = tmp_path / "d.json"
    checkpoint.save(path, specs, params)
    loaded = checkpoint.load(path)
    assert np.array_equal(loaded.params[0][0], params[0][0])
    assert loaded.params[0][0].dtype == np.float64
