"""Shared test helpers: frame builders and independent reference oracles."""

import numpy as np

from anomscope import frame_from_array


def make_frame(values):
    return frame_from_array(np.asarray(values, dtype=np.float64))


def random_frame(rng, height, width):
    return frame_from_array(rng.random((height, width)))


def quantized_random_frame(rng, height, width):
    """Random frame restricted to the 256 intensity levels of 8-bit images."""
    return frame_from_array(rng.integers(0, 256, size=(height, width)) / 255.0)


def gaussian_blob_image(size, cx, cy, sigma, amplitude=1.0):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return amplitude * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma**2))


def naive_correlate(data, taps):
    """Reference correlation: nested loops with coordinate clamping at edges.

    Same convention as the library (no kernel flip); deliberately slow and
    index-by-index so it cannot share bugs with the vectorized path.
    """
    r = (taps.shape[0] - 1) // 2
    h, w = data.shape
    out = np.zeros_like(data, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    acc += taps[dy + r, dx + r] * data[yy, xx]
            out[y, x] = acc
    return out


def random_symmetric_kernel(rng, radius):
    """Random taps that are exactly symmetric under both flips and transpose."""
    m = rng.random((2 * radius + 1, 2 * radius + 1))
    s = m + m[::-1, :]
    s = s + s[:, ::-1]
    s = s + s.T
    return s
