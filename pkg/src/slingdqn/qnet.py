"""Dueling double-Q network: architecture, action values, targets, loss.

The network maps a normalized 84x84x3 state through four conv layers to
a single spatial cell, then splits into a scalar state-value stream and
a 91-way advantage stream recombined as ``q = v + (a - mean(a))``.

The stated conv geometry (kernels 8/4/3/7, strides 4/2/2/1, no padding)
leaves a 4x4 map that a 7x7 kernel cannot cover, so the final conv pads
its input to 7x7 ((2,1) per axis) and reduces to 1x1.  The resulting
dimension flow 84 -> 20 -> 9 -> 4 -> (pad 7) -> 1 is recorded in every
checkpoint header.
"""

import copy
from dataclasses import dataclass

import numpy as np

from slingdqn import vision
from slingdqn.nn import checkpoint as ckpt
from slingdqn.nn import layers

ACTION_COUNT = 91
STATE_SHAPE = vision.STATE_SHAPE

FULL_CONV_FILTERS = (32, 64, 64, 512)


@dataclass(frozen=True)
class AgentConfig:
    """Training hyperparameters for the agent."""

    gamma: float = 0.99
    tau: int = 1000  # target sync interval, in gradient steps
    learning_rate: float = 1e-5
    batch_size: int = 32
    update_rate: int = 4  # environment steps per gradient step
    double_q: bool = True
    epsilon_schedule: tuple = (1.0, 0.1, 10_000)  # (start, end, decay steps)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.tau < 1 or self.batch_size < 1 or self.update_rate < 1:
            raise ValueError("tau, batch_size and update_rate must be >= 1")
        start, end, decay = self.epsilon_schedule
        if not (0.0 <= end <= start <= 1.0) or decay < 1:
            raise ValueError(f"bad epsilon schedule {self.epsilon_schedule}")

    def epsilon_at(self, step):
        """Linearly annealed exploration rate at an environment step."""
        start, end, decay = self.epsilon_schedule
        if step >= decay:
            return end
        return start + (end - start) * (step / decay)

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "tau": self.tau,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "update_rate": self.update_rate,
            "double_q": self.double_q,
            "epsilon_schedule": list(self.epsilon_schedule),
        }

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        doc["epsilon_schedule"] = tuple(doc["epsilon_schedule"])
        return cls(**doc)


def network_specs(conv_filters=FULL_CONV_FILTERS):
    """The layer sequence; ``conv_filters`` sets the four conv widths."""
    f1, f2, f3, f4 = conv_filters
    return (
        layers.conv((8, 8), (4, 4), 3, f1),
        layers.relu(),
        layers.conv((4, 4), (2, 2), f1, f2),
        layers.relu(),
        layers.conv((3, 3), (2, 2), f2, f3),
        layers.relu(),
        layers.conv((7, 7), (1, 1), f3, f4, padding=((2, 1), (2, 1))),
        layers.relu(),
        layers.flatten(),
        layers.dueling_split(f4, ACTION_COUNT),
    )


def dimension_flow(specs, input_shape=STATE_SHAPE):
    """Human-readable trace of the spatial flow, for checkpoint headers."""
    parts = [f"{input_shape[0]}x{input_shape[1]}x{input_shape[2]}"]
    for spec, shape in zip(specs, layers.infer_shapes(specs, input_shape)):
        if spec.kind == layers.CONV:
            pad = spec.padding
            note = "" if pad == layers.NO_PADDING else f" pad{pad}"
            parts.append(
                f"conv{spec.kernel[0]}x{spec.kernel[1]}s{spec.stride[0]}{note}"
                f" -> {shape[0]}x{shape[1]}x{shape[2]}"
            )
        elif spec.kind == layers.FLATTEN:
            parts.append(f"flatten -> {shape[0]}")
        elif spec.kind == layers.DUELING:
            parts.append(f"value(1) + advantage({spec.out_dim}) -> q({shape[0]})")
    return " | ".join(parts)


@dataclass
class QNetwork:
    """Layer specs plus parameters, with convenience accessors.

    ``trunk_params`` are the conv weights, ``value_params`` /
    ``advantage_params`` the two dense streams inside the final
    dueling layer.
    """

    specs: tuple
    params: list

    @property
    def trunk_params(self):
        return [p for spec, p in zip(self.specs, self.params) if spec.kind == layers.CONV]

    @property
    def value_params(self):
        return self.params[-1][:2]

    @property
    def advantage_params(self):
        return self.params[-1][2:]

    def q_values(self, state):
        return q_values(self, state)

    def copy(self):
        return QNetwork(specs=self.specs, params=layers.copy_params(self.params))

    def astype(self, dtype):
        return QNetwork(specs=self.specs, params=layers.cast_params(self.params, dtype))


def build_network(seed, conv_filters=FULL_CONV_FILTERS, dtype=np.float32):
    """Deterministically initialized network for a given seed."""
    specs = network_specs(conv_filters)
    rng = np.random.default_rng(seed)
    return QNetwork(specs=specs, params=layers.init_params(specs, rng, dtype))


def _as_batch(state):
    state = np.asarray(state)
    if state.ndim == len(STATE_SHAPE):
        return state[None, ...], True
    return state, False


def q_values(net, state):
    """Action values for one state (91,) or a batch (n, 91)."""
    x, single = _as_batch(state)
    q, _ = layers.forward(net.specs, net.params, x)
    return q[0] if single else q


def q_and_value(net, state):
    """Action values plus the value-stream tap (for identifiability checks)."""
    x, single = _as_batch(state)
    q, cache = layers.forward(net.specs, net.params, x)
    v = cache.entries[-1][1][:, 0]
    return (q[0], float(v[0])) if single else (q, v)


def epsilon_greedy(q, epsilon, rng):
    """Epsilon-greedy choice over a precomputed q-vector.

    Draws from ``rng`` in the same order as :func:`select_action`, so
    the two are interchangeable within a seeded run.
    """
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(ACTION_COUNT))
    return int(np.argmax(q))


def select_action(net, state, epsilon, rng):
    """Epsilon-greedy action; greedy ties break to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(ACTION_COUNT))
    return int(np.argmax(net.q_values(state)))


def dqn_target(target_net, r, next_state, done, gamma):
    """Bootstrap target from the target network's max action value."""
    if done:
        return float(r)
    return float(r + gamma * np.max(target_net.q_values(next_state)))


def double_dqn_target(online_net, target_net, r, next_state, done, gamma):
    """Select the action online, evaluate it with the target network."""
    if done:
        return float(r)
    a_star = int(np.argmax(online_net.q_values(next_state)))
    return float(r + gamma * target_net.q_values(next_state)[a_star])


def states_to_batch(states, dtype=np.float32):
    """Stack stored frames into a network input batch.

    Integer frames are normalized on load; float frames are assumed
    already normalized and pass through (cast to ``dtype``).
    """
    out = np.empty((len(states),) + STATE_SHAPE, dtype=dtype)
    for i, s in enumerate(states):
        s = np.asarray(s)
        if np.issubdtype(s.dtype, np.integer):
            out[i] = vision.normalize(s, dtype=dtype).tensor
        else:
            out[i] = s.astype(dtype, copy=False)
    return out


def batch_targets(online_net, target_net, batch, config, dtype=np.float32):
    """Vectorized per-transition targets for a batch of experiences."""
    next_states = states_to_batch([e.next_state for e in batch], dtype)
    rewards = np.array([e.reward for e in batch], dtype=np.float64)
    done = np.array([e.done for e in batch], dtype=bool)
    qt, _ = layers.forward(target_net.specs, target_net.params, next_states)
    if config.double_q:
        qo, _ = layers.forward(online_net.specs, online_net.params, next_states)
        a_star = np.argmax(qo, axis=1)
        boot = qt[np.arange(len(batch)), a_star]
    else:
        boot = np.max(qt, axis=1)
    y = rewards + config.gamma * np.asarray(boot, dtype=np.float64) * (~done)
    return y


def loss_and_grads(online_net, target_net, batch, config, dtype=np.float32):
    """Mean squared TD error over a batch and its parameter gradients.

    Targets are constants (no gradient flows through the target
    network), and only the taken action's output receives a nonzero
    output gradient.
    """
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    y = batch_targets(online_net, target_net, batch, config, dtype)
    states = states_to_batch([e.state for e in batch], dtype)
    actions = np.array([e.action for e in batch], dtype=np.intp)
    q, cache = layers.forward(online_net.specs, online_net.params, states)
    n = len(batch)
    pred = q[np.arange(n), actions].astype(np.float64)
    resid = pred - y
    loss = float(np.mean(resid**2))
    if not np.isfinite(loss):
        raise ValueError("non-finite loss")
    gq = np.zeros_like(q)
    gq[np.arange(n), actions] = (2.0 / n) * resid
    grads, _ = layers.backward(online_net.specs, online_net.params, cache, gq)
    return loss, grads


def sync_target(online_net, target_net, step, tau):
    """Hard copy of the online weights into the target every ``tau`` steps."""
    if step % tau == 0:
        return online_net.copy()
    return target_net


def checkpoint_header(net):
    return {"dimension_flow": dimension_flow(net.specs)}


def save_network(path, net, opt_state=None, step=0, agent_config=None, extra_header=None):
    header = checkpoint_header(net)
    if extra_header:
        header.update(extra_header)
    ckpt.save(
        path,
        net.specs,
        net.params,
        opt_state=opt_state,
        step=step,
        agent_config=agent_config.to_dict() if agent_config is not None else None,
        header=header,
    )


def load_network(path):
    """Returns ``(net, opt_state, step, agent_config_or_None)``."""
    c = ckpt.load(path)
    net = QNetwork(specs=c.specs, params=c.params)
    config = AgentConfig.from_dict(c.agent_config) if c.agent_config else None
    return net, c.opt_state, c.step, config


def clone_network(net):
    return copy.deepcopy(net)
