"""Tabular harness: the Q-update rule isolated on a tiny known MDP.

The embedded MDP has 5 states and 3 actions with deterministic
transitions and rewards, so value iteration gives an exact Q* to
converge against.  The harness drives the same target functions the
network agent uses, with an explicit Q-table in place of the network
and a frozen copy of it in place of the target network.
"""

from dataclasses import dataclass

import numpy as np

from slingdqn import qnet

# Deterministic 5-state, 3-action MDP (strongly connected, no terminals).
MDP_REWARDS = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 2.0, 0.0],
        [0.0, 0.0, 3.0],
        [1.0, 1.0, -1.0],
        [2.0, 0.0, 1.0],
    ]
)
MDP_TRANSITIONS = np.array(
    [
        [1, 2, 0],
        [2, 3, 1],
        [3, 4, 0],
        [4, 0, 2],
        [0, 1, 3],
    ],
    dtype=np.intp,
)

N_STATES, N_ACTIONS = MDP_REWARDS.shape

DEFAULT_GAMMA = 0.9
DEFAULT_ALPHA = 0.5
DEFAULT_TAU = 250


class QTable:
    """Explicit action-value table exposing the network's q_values API."""

    def __init__(self, table=None):
        self.table = (
            np.zeros((N_STATES, N_ACTIONS)) if table is None else np.array(table, dtype=float)
        )

    def q_values(self, state):
        return self.table[int(state)]

    def copy(self):
        return QTable(self.table.copy())


def value_iteration(gamma, tol=1e-12, max_iter=100_000):
    """Exact Q* of the embedded MDP by dynamic programming."""
    q = np.zeros((N_STATES, N_ACTIONS))
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_next = MDP_REWARDS + gamma * v[MDP_TRANSITIONS]
        if np.max(np.abs(q_next - q)) < tol:
            return q_next
        q = q_next
    return q


@dataclass
class TabularResult:
    table: QTable
    updates: int
    max_error_vs_value_iteration: float


def train_tabular(
    n_updates,
    gamma=DEFAULT_GAMMA,
    alpha=DEFAULT_ALPHA,
    tau=DEFAULT_TAU,
    double_q=False,
    seed=0,
):
    """Run bootstrap updates on uniformly sampled (state, action) pairs.

    Targets come from :func:`slingdqn.qnet.dqn_target` (or the double
    variant) against a target table synced every ``tau`` updates.
    """
    rng = np.random.default_rng(seed)
    online = QTable()
    target = online.copy()
    for t in range(1, n_updates + 1):
        s = int(rng.integers(N_STATES))
        a = int(rng.integers(N_ACTIONS))
        s2 = int(MDP_TRANSITIONS[s, a])
        r = float(MDP_REWARDS[s, a])
        if double_q:
            y = qnet.double_dqn_target(online, target, r, s2, False, gamma)
        else:
            y = qnet.dqn_target(target, r, s2, False, gamma)
        online.table[s, a] += alpha * (y - online.table[s, a])
        if t % tau == 0:
            target = online.copy()
    q_star = value_iteration(gamma)
    err = float(np.max(np.abs(online.table - q_star)))
    return TabularResult(table=online, updates=n_updates, max_error_vs_value_iteration=err)
