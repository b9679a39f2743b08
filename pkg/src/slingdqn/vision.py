"""Frame preprocessing: crop the playfield, resize, normalize.

Raw captures are 840x480 RGB.  A fixed 770x310 window is cropped out
(excluding the surrounding UI chrome), bilinearly resized to 84x84 and
normalized to zero mean and unit Euclidean norm.  The integer 84x84x3
frame (post-resize, pre-normalization) is the canonical stored form;
normalization is applied when frames are loaded for the network.
"""

from typing import NamedTuple

import numpy as np

RAW_WIDTH, RAW_HEIGHT = 840, 480
CROP_WIDTH, CROP_HEIGHT = 770, 310
# (left, top) pixel offset of the playfield window inside a raw capture.
DEFAULT_CROP_OFFSET = (35, 85)
NET_HW = (84, 84)
STATE_SHAPE = (84, 84, 3)

DEGENERATE_NORM_EPS = 1e-12


class NormalizeResult(NamedTuple):
    tensor: np.ndarray
    degenerate: bool


def crop(frame, offset=DEFAULT_CROP_OFFSET):
    """Extract the 770x310 playfield from an 840x480 capture."""
    frame = np.asarray(frame)
    if frame.shape != (RAW_HEIGHT, RAW_WIDTH, 3):
        raise ValueError(
            f"expected a {RAW_WIDTH}x{RAW_HEIGHT} RGB frame, got shape {frame.shape}"
        )
    left, top = offset
    if left < 0 or top < 0 or left + CROP_WIDTH > RAW_WIDTH or top + CROP_HEIGHT > RAW_HEIGHT:
        raise ValueError(f"crop offset {offset} puts the window out of bounds")
    return frame[top : top + CROP_HEIGHT, left : left + CROP_WIDTH]


def _resize_plan(in_h, in_w, out_h, out_w):
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, in_h - 1.0)
    xs = np.clip(xs, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    return y0, y1, x0, x1, wy, wx


_PLAN_CACHE = {}


def bilinear_resize(img, out_h, out_w):
    """Bilinear interpolation with half-pixel-centered sampling, in float64.

    Same-size resize is exactly the identity.
    """
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape[:2]
    key = (in_h, in_w, out_h, out_w)
    if key not in _PLAN_CACHE:
        _PLAN_CACHE[key] = _resize_plan(in_h, in_w, out_h, out_w)
    y0, y1, x0, x1, wy, wx = _PLAN_CACHE[key]
    i00 = img[np.ix_(y0, x0)]
    i01 = img[np.ix_(y0, x1)]
    i10 = img[np.ix_(y1, x0)]
    i11 = img[np.ix_(y1, x1)]
    top = i00 * (1.0 - wx) + i01 * wx
    bot = i10 * (1.0 - wx) + i11 * wx
    return top * (1.0 - wy) + bot * wy


def resize(frame, size=NET_HW):
    """Resize an RGB frame to ``size`` (h, w); returns uint8 pixels."""
    out = bilinear_resize(frame, size[0], size[1])
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def normalize(frame, per_channel=False, dtype=np.float32):
    """Zero-mean, unit-L2-norm tensor from pixel values.

    The norm is taken over the whole tensor by default; ``per_channel``
    normalizes each RGB channel independently.  An all-constant frame
    has no direction to normalize, so it maps to the zero tensor with
    ``degenerate=True``.
    """
    x = np.asarray(frame, dtype=np.float64)
    degenerate = False
    if per_channel:
        x = x - x.mean(axis=(0, 1), keepdims=True)
        norms = np.sqrt((x * x).sum(axis=(0, 1), keepdims=True))
        degenerate = bool(np.any(norms <= DEGENERATE_NORM_EPS))
        if degenerate:
            x = np.zeros_like(x)
        else:
            x = x / norms
    else:
        x = x - x.mean()
        norm = float(np.sqrt((x * x).sum()))
        if norm <= DEGENERATE_NORM_EPS:
            degenerate = True
            x = np.zeros_like(x)
        else:
            x = x / norm
    return NormalizeResult(tensor=x.astype(dtype), degenerate=degenerate)


def preprocess_to_frame(frame, offset=DEFAULT_CROP_OFFSET):
    """Crop + resize only: the integer 84x84x3 frame used for storage."""
    return resize(crop(frame, offset))


def preprocess(frame, offset=DEFAULT_CROP_OFFSET, per_channel=False, dtype=np.float32):
    """Full chain: crop, resize, normalize.  840x480 in, 84x84x3 out."""
    return normalize(preprocess_to_frame(frame, offset), per_channel, dtype).tensor
