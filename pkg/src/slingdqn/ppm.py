"""Binary PPM (P6) reading and writing for frame files."""

import numpy as np


def write_ppm(path, pixels):
    """Write an (h, w, 3) uint8 array as a binary P6 file."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError(f"expected (h, w, 3) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    h, w = pixels.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def _read_token(f):
    # Skips whitespace and '#' comments between header tokens.
    token = b""
    while True:
        ch = f.read(1)
        if not ch:
            raise ValueError("truncated PPM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_ppm(path):
    """Read a binary P6 file into an (h, w, 3) uint8 array."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic != b"P6":
            raise ValueError(f"{path}: not a binary PPM (P6) file")
        w = int(_read_token(f))
        h = int(_read_token(f))
        maxval = int(_read_token(f))
        if maxval != 255:
            raise ValueError(f"{path}: unsupported maxval {maxval}")
        data = f.read(w * h * 3)
    if len(data) != w * h * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3).copy()
