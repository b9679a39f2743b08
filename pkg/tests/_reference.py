"""Independent reference implementations used as test oracles.

Deliberately naive: plain loops and textbook formulas, sharing no code
with the production paths they check.
"""

import numpy as np


def naive_conv2d(x, w, b, stride, padding=((0, 0), (0, 0))):
    """Quintuple-loop valid cross-correlation on a padded input."""
    (pt, pb), (pl, pr) = padding
    x = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    n, h, wid, ci = x.shape
    kh, kw, _, co = w.shape
    sh, sw = stride
    oh = (h - kh) // sh + 1
    ow = (wid - kw) // sw + 1
    out = np.zeros((n, oh, ow, co), dtype=np.float64)
    for nn in range(n):
        for i in range(oh):
            for j in range(ow):
                for o in range(co):
                    acc = float(b[o])
                    for u in range(kh):
                        for v in range(kw):
                            for c in range(ci):
                                acc += float(x[nn, i * sh + u, j * sw + v, c]) * float(
                                    w[u, v, c, o]
                                )
                    out[nn, i, j, o] = acc
    return out


def numeric_param_grads(loss_of_params, params, coords, step=1e-4):
    """Central finite differences of a scalar loss at chosen coordinates."""
    grads = {}
    for li, pi, k in coords:
        p = params[li][pi]
        orig = p.flat[k]
        p.flat[k] = orig + step
        lp = loss_of_params()
        p.flat[k] = orig - step
        lm = loss_of_params()
        p.flat[k] = orig
        grads[(li, pi, k)] = (lp - lm) / (2.0 * step)
    return grads


def bilinear_sample(img, y, x):
    """Closed-form bilinear value at a (possibly fractional) point."""
    h, w = img.shape[:2]
    y = min(max(y, 0.0), h - 1.0)
    x = min(max(x, 0.0), w - 1.0)
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = y - y0, x - x0
    return (
        img[y0, x0] * (1 - fy) * (1 - fx)
        + img[y0, x1] * (1 - fy) * fx
        + img[y1, x0] * fy * (1 - fx)
        + img[y1, x1] * fy * fx
    )


def trajectory_height(sx, sy, v0, g, angle_deg, x):
    """Analytic parabola height at horizontal position x (y-up)."""
    theta = np.radians(angle_deg)
    vx = v0 * np.cos(theta)
    vy = v0 * np.sin(theta)
    t = (x - sx) / vx
    return sy + vy * t - 0.5 * g * t * t
