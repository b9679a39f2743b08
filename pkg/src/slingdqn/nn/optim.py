"""Parameter updates: Adam for training, plain SGD for closed-form tests."""

from dataclasses import dataclass

import numpy as np

ADAM = "adam"
SGD = "sgd"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class OptimizerState:
    """Per-parameter moment accumulators plus a step counter.

    ``m``/``v`` mirror the parameter structure for Adam and are ``None``
    in SGD mode.
    """

    kind: str
    step: int = 0
    m: list = None
    v: list = None


def init_optimizer(kind, params):
    if kind == SGD:
        return OptimizerState(kind=SGD, step=0)
    if kind == ADAM:
        zeros = lambda: [[np.zeros_like(p) for p in layer] for layer in params]
        return OptimizerState(kind=ADAM, step=0, m=zeros(), v=zeros())
    raise ValueError(f"unknown optimizer kind {kind!r}")


def _check_agreement(params, grads):
    if len(params) != len(grads):
        raise ValueError("gradient structure does not match parameters")
    for lp, lg in zip(params, grads):
        if len(lp) != len(lg):
            raise ValueError("gradient structure does not match parameters")
        for p, g in zip(lp, lg):
            if p.shape != g.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter {p.shape}"
                )
            if not np.all(np.isfinite(g)):
                raise ValueError("non-finite gradient; refusing to update")


def apply_update(params, grads, state, learning_rate):
    """One optimizer step; returns ``(new_params, new_state)``.

    Deterministic given its inputs.  Non-finite gradients are rejected
    rather than clipped so training bugs surface immediately.
    """
    _check_agreement(params, grads)
    t = state.step + 1
    if state.kind == SGD:
        new = [
            [p - learning_rate * g for p, g in zip(lp, lg)]
            for lp, lg in zip(params, grads)
        ]
        return new, OptimizerState(kind=SGD, step=t)
    # Adam with bias correction.
    new_params, new_m, new_v = [], [], []
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for lp, lg, lm, lv in zip(params, grads, state.m, state.v):
        out_p, out_m, out_v = [], [], []
        for p, g, m, v in zip(lp, lg, lm, lv):
            m2 = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
            v2 = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * (g * g)
            mhat = m2 / bc1
            vhat = v2 / bc2
            step = learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
            out_p.append((p - step).astype(p.dtype, copy=False))
            out_m.append(m2)
            out_v.append(v2)
        new_params.append(out_p)
        new_m.append(out_m)
        new_v.append(out_v)
    return new_params, OptimizerState(kind=ADAM, step=t, m=new_m, v=new_v)
