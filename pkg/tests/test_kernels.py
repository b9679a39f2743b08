"""Convolution kernels against the naive loop oracle, on both backends."""

import numpy as np
import pytest

from slingdqn.nn import kernels

from _reference import naive_conv2d

CASES = [
    # (n, h, w, ci, kh, kw, co, stride, padding)
    (2, 84, 84, 3, 8, 8, 4, (4, 4), ((0, 0), (0, 0))),
    (2, 9, 9, 4, 3, 3, 5, (2, 2), ((0, 0), (0, 0))),
    (1, 4, 4, 3, 7, 7, 6, (1, 1), ((2, 1), (2, 1))),
    (3, 10, 7, 2, 3, 2, 4, (1, 2), ((1, 1), (0, 2))),
]


def _random_case(case, seed, dtype):
    n, h, w, ci, kh, kw, co, stride, padding = case
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, h, w, ci)).astype(dtype)
    wgt = rng.standard_normal((kh, kw, ci, co)).astype(dtype)
    b = rng.standard_normal(co).astype(dtype)
    return x, wgt, b, stride, padding


@pytest.mark.parametrize("case", CASES)
def test_forward_matches_naive_loops(case):
    x, w, b, stride, padding = _random_case(case, 0, np.float64)
    got = kernels.conv2d_forward(x, w, b, stride, padding)
    want = naive_conv2d(x, w, b, stride, padding)
    assert got.shape == want.shape
    assert np.allclose(got, want, atol=1e-10, rtol=1e-10)


@pytest.mark.parametrize("case", CASES)
def test_forward_float32_within_1e6(case):
    x, w, b, stride, padding = _random_case(case, 1, np.float32)
    got = kernels.conv2d_forward(x, w, b, stride, padding)
    want = naive_conv2d(x.astype(np.float64), w.astype(np.float64),
                        b.astype(np.float64), stride, padding)
    assert got.dtype == np.float32
    assert np.allclose(got, want, atol=2e-5, rtol=1e-6 * 50)


@pytest.mark.parametrize("case", CASES)
def test_backward_matches_finite_differences(case):
    x, w, b, stride, padding = _random_case(case, 2, np.float64)
    gy = np.random.default_rng(3).standard_normal(
        kernels.conv2d_forward(x, w, b, stride, padding).shape
    )
    gx, gw, gb = kernels.conv2d_backward(x, w, stride, gy, padding)
    assert gx.shape == x.shape and gw.shape == w.shape and gb.shape == b.shape

    step = 1e-6
    rng = np.random.default_rng(4)

    def loss():
        return float(np.sum(kernels.conv2d_forward(x, w, b, stride, padding) * gy))

    for arr, grad in ((x, gx), (w, gw), (b, gb)):
        for k in rng.choice(arr.size, size=min(20, arr.size), replace=False):
            orig = arr.flat[k]
            arr.flat[k] = orig + step
            lp = loss()
            arr.flat[k] = orig - step
            lm = loss()
            arr.flat[k] = orig
            numeric = (lp - lm) / (2 * step)
            assert abs(numeric - grad.flat[k]) < 1e-6 * max(1.0, abs(numeric))


def test_backends_agree():
    """The njit loops and the im2col path compute the same convolution."""
    case = CASES[0]
    x, w, b, stride, padding = _random_case(case, 5, np.float64)
    via_loops = np.empty_like(naive_conv2d(x, w, b, stride, padding))
    kernels._conv2d_fwd_jit(x, w, b, stride[0], stride[1], via_loops)

    n, oh, ow, co = via_loops.shape
    cols = kernels._window_view(x, w.shape[0], w.shape[1], stride[0], stride[1], oh, ow)
    via_gemm = cols.reshape(n * oh * ow, -1) @ w.reshape(-1, co) + b
    assert np.allclose(via_loops, via_gemm.reshape(via_loops.shape), atol=1e-10)


def test_zero_output_grad_gives_zero_param_grads():
    x, w, b, stride, padding = _random_case(CASES[1], 6, np.float64)
    y = kernels.conv2d_forward(x, w, b, stride, padding)
    gx, gw, gb = kernels.conv2d_backward(x, w, stride, np.zeros_like(y), padding)
    assert not np.any(gx) and not np.any(gw) and not np.any(gb)
