"""Finite-difference validation of the analytic gradients.

``grad_check`` perturbs a sample of parameters with central differences
and compares against the reverse-mode result.  Run it in float64: the
step of 1e-4 is meaningless at single precision.
"""

from dataclasses import dataclass

import numpy as np

from slingdqn.nn import layers


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    degenerate: bool  # analytic gradient identically zero everywhere


def _sample_coords(params, n_samples, rng):
    sizes = [(li, pi, p.size) for li, layer in enumerate(params) for pi, p in enumerate(layer)]
    total = sum(s for _, _, s in sizes)
    coords = []
    for li, pi, size in sizes:
        quota = max(1, int(round(n_samples * size / total)))
        quota = min(quota, size)
        idx = rng.choice(size, size=quota, replace=False)
        coords.extend((li, pi, int(k)) for k in idx)
    return coords


def grad_check(specs, params, x, loss_fn, n_samples=200, step=1e-4, rng=None):
    """Max relative error between analytic and numeric parameter gradients.

    ``loss_fn`` maps the network output to ``(loss, dloss_doutput)``;
    only the loss value is used on the numeric side, keeping the two
    routes independent.  Error per coordinate is
    ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    y, cache = layers.forward(specs, params, x)
    _, gy = loss_fn(y)
    grads, _ = layers.backward(specs, params, cache, gy)

    degenerate = all(not np.any(g) for layer in grads for g in layer)
    coords = _sample_coords(params, n_samples, rng)
    max_err = 0.0
    for li, pi, k in coords:
        p = params[li][pi]
        orig = p.flat[k]
        p.flat[k] = orig + step
        lp, _ = loss_fn(layers.forward(specs, params, x)[0])
        p.flat[k] = orig - step
        lm, _ = loss_fn(layers.forward(specs, params, x)[0])
        p.flat[k] = orig
        numeric = (lp - lm) / (2.0 * step)
        analytic = grads[li][pi].flat[k]
        denom = max(abs(analytic), abs(numeric), 1e-8)
        err = abs(analytic - numeric) / denom
        if degenerate:
            err = 0.0
        max_err = max(max_err, err)
    return GradCheckResult(
        max_rel_error=float(max_err), n_checked=len(coords), degenerate=degenerate
    )
