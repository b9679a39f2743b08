"""Layer specifications and exact forward/backward passes.

A network is a flat sequence of :class:`LayerSpec` plus a parallel list
of parameter lists (one list of ndarrays per layer, empty for
parameter-free layers).  ``forward`` returns the output and a cache;
``backward`` consumes that cache and produces gradients with shapes
mirroring the parameters.  All derivatives are exact reverse-mode and
are validated against central finite differences in the tests.
"""

from dataclasses import dataclass, field

import numpy as np

from slingdqn.nn import kernels

CONV = "conv"
DENSE = "dense"
RELU = "relu"
FLATTEN = "flatten"
DUELING = "dueling-split"

_KINDS = (CONV, DENSE, RELU, FLATTEN, DUELING)

NO_PADDING = ((0, 0), (0, 0))


class ShapeError(ValueError):
    """Raised when an input does not fit a layer's declared geometry."""


@dataclass(frozen=True)
class LayerSpec:
    """Geometry of a single layer.

    ``kernel``/``stride``/``padding``/``in_channels``/``out_channels``
    apply to ``conv`` layers, ``in_dim``/``out_dim`` to ``dense`` and
    ``dueling-split`` (where ``out_dim`` is the action count and the
    value head always has width 1).
    """

    kind: str
    kernel: tuple = None
    stride: tuple = None
    padding: tuple = NO_PADDING
    in_channels: int = None
    out_channels: int = None
    in_dim: int = None
    out_dim: int = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == CONV:
            kh, kw = self.kernel
            sh, sw = self.stride
            if min(kh, kw, sh, sw) < 1:
                raise ValueError("kernel and stride must be positive")
            if self.in_channels < 1 or self.out_channels < 1:
                raise ValueError("channel counts must be positive")
        elif self.kind in (DENSE, DUELING):
            if self.in_dim < 1 or self.out_dim < 1:
                raise ValueError("dense dims must be positive")


def conv(kernel, stride, in_channels, out_channels, padding=NO_PADDING):
    return LayerSpec(
        CONV,
        kernel=tuple(kernel),
        stride=tuple(stride),
        padding=(tuple(padding[0]), tuple(padding[1])),
        in_channels=in_channels,
        out_channels=out_channels,
    )


def dense(in_dim, out_dim):
    return LayerSpec(DENSE, in_dim=in_dim, out_dim=out_dim)


def relu():
    return LayerSpec(RELU)


def flatten():
    return LayerSpec(FLATTEN)


def dueling_split(in_dim, actions):
    return LayerSpec(DUELING, in_dim=in_dim, out_dim=actions)


def _conv_out_hw(spec, h, w):
    (pt, pb), (pl, pr) = spec.padding
    kh, kw = spec.kernel
    sh, sw = spec.stride
    oh = (h + pt + pb - kh) // sh + 1
    ow = (w + pl + pr - kw) // sw + 1
    return oh, ow


def output_shape(spec, in_shape):
    """Shape (without the batch axis) a layer produces from ``in_shape``."""
    if spec.kind == CONV:
        if len(in_shape) != 3 or in_shape[2] != spec.in_channels:
            raise ShapeError(
                f"conv expects (h, w, {spec.in_channels}), got {in_shape}"
            )
        oh, ow = _conv_out_hw(spec, in_shape[0], in_shape[1])
        if oh < 1 or ow < 1:
            raise ShapeError(
                f"conv kernel {spec.kernel} does not fit input {in_shape[:2]}"
            )
        return (oh, ow, spec.out_channels)
    if spec.kind == DENSE:
        if len(in_shape) != 1 or in_shape[0] != spec.in_dim:
            raise ShapeError(f"dense expects ({spec.in_dim},), got {in_shape}")
        return (spec.out_dim,)
    if spec.kind == DUELING:
        if len(in_shape) != 1 or in_shape[0] != spec.in_dim:
            raise ShapeError(
                f"dueling-split expects ({spec.in_dim},), got {in_shape}"
            )
        return (spec.out_dim,)
    if spec.kind == FLATTEN:
        return (int(np.prod(in_shape)),)
    return tuple(in_shape)


def infer_shapes(specs, input_shape):
    """Per-layer output shapes; raises ShapeError naming the bad layer."""
    shapes = []
    cur = tuple(input_shape)
    for i, spec in enumerate(specs):
        try:
            cur = output_shape(spec, cur)
        except ShapeError as e:
            raise ShapeError(f"layer {i} ({spec.kind}): {e}") from None
        shapes.append(cur)
    return shapes


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_params(specs, rng, dtype=np.float32):
    """Glorot-uniform weights, zero biases; deterministic given ``rng``."""
    params = []
    for spec in specs:
        if spec.kind == CONV:
            kh, kw = spec.kernel
            ci, co = spec.in_channels, spec.out_channels
            w = _glorot(rng, (kh, kw, ci, co), kh * kw * ci, kh * kw * co, dtype)
            b = np.zeros(co, dtype=dtype)
            params.append([w, b])
        elif spec.kind == DENSE:
            w = _glorot(rng, (spec.in_dim, spec.out_dim), spec.in_dim, spec.out_dim, dtype)
            b = np.zeros(spec.out_dim, dtype=dtype)
            params.append([w, b])
        elif spec.kind == DUELING:
            d, a = spec.in_dim, spec.out_dim
            vw = _glorot(rng, (d, 1), d, 1, dtype)
            vb = np.zeros(1, dtype=dtype)
            aw = _glorot(rng, (d, a), d, a, dtype)
            ab = np.zeros(a, dtype=dtype)
            params.append([vw, vb, aw, ab])
        else:
            params.append([])
    return params


def param_shapes(specs):
    """Parameter shapes per layer without materializing arrays."""
    shapes = []
    for spec in specs:
        if spec.kind == CONV:
            kh, kw = spec.kernel
            shapes.append(
                [(kh, kw, spec.in_channels, spec.out_channels), (spec.out_channels,)]
            )
        elif spec.kind == DENSE:
            shapes.append([(spec.in_dim, spec.out_dim), (spec.out_dim,)])
        elif spec.kind == DUELING:
            shapes.append(
                [
                    (spec.in_dim, 1),
                    (1,),
                    (spec.in_dim, spec.out_dim),
                    (spec.out_dim,),
                ]
            )
        else:
            shapes.append([])
    return shapes


def check_param_shapes(specs, params):
    expected = param_shapes(specs)
    if len(params) != len(specs):
        raise ShapeError(f"expected {len(specs)} parameter lists, got {len(params)}")
    for i, (exp, got) in enumerate(zip(expected, params)):
        got_shapes = [tuple(p.shape) for p in got]
        if [tuple(s) for s in exp] != got_shapes:
            raise ShapeError(
                f"layer {i} ({specs[i].kind}): parameter shapes {got_shapes} "
                f"do not match spec {exp}"
            )


@dataclass
class ForwardCache:
    """Per-layer tensors retained for the backward pass."""

    input_shape: tuple
    output_shape: tuple
    entries: list = field(default_factory=list)
    kinds: tuple = ()


def forward(specs, params, x):
    """Run the network on a batch ``x``; returns ``(output, cache)``.

    ``x`` must carry an explicit batch axis.  Shape problems raise
    :class:`ShapeError` naming the offending layer.
    """
    check_param_shapes(specs, params)
    infer_shapes(specs, x.shape[1:])  # validates the whole chain up front
    cache = ForwardCache(input_shape=x.shape, output_shape=None, kinds=tuple(s.kind for s in specs))
    h = x
    for spec, p in zip(specs, params):
        if spec.kind == CONV:
            w, b = p
            xp_needed = h
            y = kernels.conv2d_forward(h, w, b, spec.stride, spec.padding)
            cache.entries.append(xp_needed)
            h = y
        elif spec.kind == RELU:
            mask = h > 0
            cache.entries.append(mask)
            h = h * mask
        elif spec.kind == FLATTEN:
            cache.entries.append(h.shape)
            h = h.reshape(h.shape[0], -1)
        elif spec.kind == DENSE:
            w, b = p
            cache.entries.append(h)
            h = h @ w + b
        else:  # dueling-split
            vw, vb, aw, ab = p
            v = h @ vw + vb  # (n, 1)
            a = h @ aw + ab  # (n, actions)
            q = v + a - a.mean(axis=1, keepdims=True)
            cache.entries.append((h, v))
            h = q
    cache.output_shape = h.shape
    return h, cache


def backward(specs, params, cache, gy):
    """Exact reverse-mode gradients.

    Returns ``(param_grads, input_grad)`` where ``param_grads`` mirrors
    the parameter structure.  A cache from a different spec sequence or
    a mismatched output gradient is rejected.
    """
    if cache.kinds != tuple(s.kind for s in specs):
        raise ShapeError("cache does not match the given layer sequence")
    if len(cache.entries) != len(specs):
        raise ShapeError("cache is incomplete for this layer sequence")
    if tuple(gy.shape) != tuple(cache.output_shape):
        raise ShapeError(
            f"output gradient shape {gy.shape} does not match forward "
            f"output {cache.output_shape}"
        )
    grads = [None] * len(specs)
    g = gy
    for i in range(len(specs) - 1, -1, -1):
        spec, p, saved = specs[i], params[i], cache.entries[i]
        if spec.kind == CONV:
            w, _ = p
            gx, gw, gb = kernels.conv2d_backward(saved, w, spec.stride, g, spec.padding)
            grads[i] = [gw, gb]
            g = gx
        elif spec.kind == RELU:
            grads[i] = []
            g = g * saved
        elif spec.kind == FLATTEN:
            grads[i] = []
            g = g.reshape(saved)
        elif spec.kind == DENSE:
            w, _ = p
            h = saved
            grads[i] = [h.T @ g, g.sum(axis=0)]
            g = g @ w.T
        else:  # dueling-split
            vw, _, aw, _ = p
            h, _v = saved
            gv = g.sum(axis=1, keepdims=True)
            ga = g - g.mean(axis=1, keepdims=True)
            grads[i] = [h.T @ gv, gv.sum(axis=0), h.T @ ga, ga.sum(axis=0)]
            g = gv @ vw.T + ga @ aw.T
    return grads, g


def cast_params(params, dtype):
    """Copy of the parameter structure in another floating dtype."""
    return [[p.astype(dtype) for p in layer] for layer in params]


def copy_params(params):
    return [[p.copy() for p in layer] for layer in params]


def flat_param_count(params):
    return sum(p.size for layer in params for p in layer)
