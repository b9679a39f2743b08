"""2D convolution kernels.

Layout conventions: activations are NHWC ``(batch, height, width,
channels)``, filters are ``(kh, kw, in_channels, out_channels)``.
Padding is applied per side as ``((top, bottom), (left, right))`` before
a valid correlation.

Two implementations of the same math live here: scalar loops compiled
with Numba (the default backend) and a vectorized im2col/BLAS path
(the ``numpy`` backend).  Both are checked against a naive reference in
the test suite.
"""

import numpy as np

from slingdqn.backend import USE_NUMBA, compiled


def _conv2d_fwd_loops(xp, w, b, sh, sw, y):
    n_, _, _, ci = xp.shape
    kh, kw, _, co = w.shape
    oh, ow = y.shape[1], y.shape[2]
    for n in range(n_):
        for i in range(oh):
            ib = i * sh
            for j in range(ow):
                jb = j * sw
                acc = y[n, i, j]
                for o in range(co):
                    acc[o] = b[o]
                for u in range(kh):
                    for v in range(kw):
                        xrow = xp[n, ib + u, jb + v]
                        for c in range(ci):
                            xv = xrow[c]
                            wrow = w[u, v, c]
                            for o in range(co):
                                acc[o] += xv * wrow[o]


def _conv2d_bwd_loops(xp, w, gy, sh, sw, gxp, gw):
    n_, _, _, ci = xp.shape
    kh, kw, _, co = w.shape
    oh, ow = gy.shape[1], gy.shape[2]
    for n in range(n_):
        for i in range(oh):
            ib = i * sh
            for j in range(ow):
                jb = j * sw
                g = gy[n, i, j]
                for u in range(kh):
                    for v in range(kw):
                        xrow = xp[n, ib + u, jb + v]
                        grow = gxp[n, ib + u, jb + v]
                        for c in range(ci):
                            wrow = w[u, v, c]
                            gwrow = gw[u, v, c]
                            acc = g[0] * 0
                            xv = xrow[c]
                            for o in range(co):
                                acc += g[o] * wrow[o]
                                gwrow[o] += xv * g[o]
                            grow[c] += acc


_conv2d_fwd_jit = compiled(_conv2d_fwd_loops)
_conv2d_bwd_jit = compiled(_conv2d_bwd_loops)


def _pad_input(x, padding):
    (pt, pb), (pl, pr) = padding
    if pt == pb == pl == pr == 0:
        return np.ascontiguousarray(x)
    return np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))


def _out_hw(hp, wp, kh, kw, sh, sw):
    return (hp - kh) // sh + 1, (wp - kw) // sw + 1


def _window_view(xp, kh, kw, sh, sw, oh, ow):
    n = xp.shape[0]
    ci = xp.shape[3]
    s0, s1, s2, s3 = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, oh, ow, kh, kw, ci),
        strides=(s0, s1 * sh, s2 * sw, s1, s2, s3),
        writeable=False,
    )


def conv2d_forward(x, w, b, stride, padding=((0, 0), (0, 0))):
    """Strided cross-correlation of ``x`` with filter bank ``w`` plus bias.

    Returns an ``(n, oh, ow, out_channels)`` array in the dtype of ``x``.
    """
    sh, sw = stride
    kh, kw, ci, co = w.shape
    xp = _pad_input(x, padding)
    n, hp, wp, _ = xp.shape
    oh, ow = _out_hw(hp, wp, kh, kw, sh, sw)
    if USE_NUMBA:
        y = np.empty((n, oh, ow, co), dtype=x.dtype)
        _conv2d_fwd_jit(xp, w, b, sh, sw, y)
        return y
    cols = _window_view(xp, kh, kw, sh, sw, oh, ow).reshape(n * oh * ow, kh * kw * ci)
    y = cols @ w.reshape(kh * kw * ci, co) + b
    return y.reshape(n, oh, ow, co)


def conv2d_backward(x, w, stride, gy, padding=((0, 0), (0, 0))):
    """Gradients of the forward pass: returns ``(gx, gw, gb)``.

    ``gy`` is the gradient w.r.t. the forward output; shapes of the
    returned arrays mirror ``x``, ``w`` and the bias respectively.
    """
    sh, sw = stride
    kh, kw, ci, co = w.shape
    (pt, pb), (pl, pr) = padding
    xp = _pad_input(x, padding)
    n, hp, wp, _ = xp.shape
    oh, ow = gy.shape[1], gy.shape[2]
    gb = gy.sum(axis=(0, 1, 2))
    if USE_NUMBA:
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(w)
        _conv2d_bwd_jit(xp, w, np.ascontiguousarray(gy), sh, sw, gxp, gw)
    else:
        cols = _window_view(xp, kh, kw, sh, sw, oh, ow).reshape(
            n * oh * ow, kh * kw * ci
        )
        gy2 = gy.reshape(n * oh * ow, co)
        gw = (cols.T @ gy2).reshape(kh, kw, ci, co)
        gcols = (gy2 @ w.reshape(kh * kw * ci, co).T).reshape(n, oh, ow, kh, kw, ci)
        gxp = np.zeros_like(xp)
        for u in range(kh):
            for v in range(kw):
                gxp[:, u : u + oh * sh : sh, v : v + ow * sw : sw, :] += gcols[
                    :, :, :, u, v, :
                ]
    if pt or pb or pl or pr:
        gx = gxp[:, pt : hp - pb, pl : wp - pr, :]
    else:
        gx = gxp
    return np.ascontiguousarray(gx), gw, gb
