"""Gaussian scale space: smoothing, Laplacian responses, extrema, descriptors.

Scale is parameterized by the Gaussian variance t (pixels squared); the
standard deviation is sqrt(t). All filtering replicates edge pixels at the
borders. The Laplacian is the 5-point stencil applied after smoothing, and
responses are scale-normalized by multiplying with t so that magnitudes are
comparable across scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._util import split_spans
from .errors import AnomscopeError

LAPLACIAN_STENCIL = np.array(
    [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]
)

DEFAULT_SCALES = (2.0, 4.0, 8.0, 16.0, 32.0)
DEFAULT_EXTREMUM_THRESHOLD = 0.01
DESCRIPTOR_STATS = 4  # mean, std, max, min per grid cell


@dataclass(frozen=True, eq=False)
class Kernel:
    """A square filter with odd side length 2*radius + 1.

    ``scale_t`` records the Gaussian variance the taps were sampled at,
    or 0.0 for kernels that are not Gaussians (identity, Laplacian).
    """

    radius: int
    taps: np.ndarray
    scale_t: float

    def __post_init__(self):
        if self.radius < 1:
            raise AnomscopeError(f"kernel radius must be >= 1, got {self.radius}")
        side = 2 * self.radius + 1
        if self.taps.shape != (side, side):
            raise AnomscopeError(
                f"kernel taps shape {self.taps.shape} does not match radius {self.radius}"
            )
        if not np.all(np.isfinite(self.taps)):
            raise AnomscopeError("kernel taps must be finite")
        if self.scale_t < 0.0:
            raise AnomscopeError(f"kernel scale must be >= 0, got {self.scale_t}")
        sym = (
            np.array_equal(self.taps, self.taps[::-1, :])
            and np.array_equal(self.taps, self.taps[:, ::-1])
            and np.array_equal(self.taps, self.taps.T)
        )
        if not sym:
            raise AnomscopeError("kernel taps must be symmetric under flips and transpose")


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """A per-pixel filter response at one scale; same size as the frame."""

    width: int
    height: int
    values: np.ndarray
    scale_t: float

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise AnomscopeError(
                f"response shape {self.values.shape} does not match "
                f"declared size {self.width}x{self.height}"
            )
        if not np.all(np.isfinite(self.values)):
            raise AnomscopeError("response values must be finite")


@dataclass(frozen=True)
class Keypoint:
    """A scale-space extremum: interior pixel (x, y) at interior scale ``scale_t``.

    ``response`` is the scale-normalized Laplacian value there and
    ``polarity`` is "max" or "min".
    """

    x: int
    y: int
    scale_t: float
    response: float
    polarity: str


def default_radius(t: float) -> int:
    """Truncation radius ceil(3 * sqrt(t)) used when none is given."""
    return max(1, math.ceil(3.0 * math.sqrt(t)))


def _gaussian_taps_1d(t: float, radius: int) -> np.ndarray:
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    return (1.0 / math.sqrt(2.0 * math.pi * t)) * np.exp(-(xs * xs) / (2.0 * t))


def gaussian_kernel(t: float, radius: int | None = None) -> Kernel:
    """Sample the 2-D Gaussian of variance t on an odd square grid.

    Taps are the density values (1 / (2*pi*t)) * exp(-(x^2 + y^2) / (2*t))
    with no renormalization, so the tap sum approaches 1 only as the radius
    grows; the default radius is ceil(3 * sqrt(t)).
    """
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t > 0):
        raise AnomscopeError(f"gaussian variance t must be a positive number, got {t!r}")
    r = default_radius(t) if radius is None else int(radius)
    if r < 1:
        raise AnomscopeError(f"kernel radius must be >= 1, got {r}")
    xs = np.arange(-r, r + 1, dtype=np.float64)
    sq = xs * xs
    taps = (1.0 / (2.0 * math.pi * t)) * np.exp(-(sq[:, None] + sq[None, :]) / (2.0 * t))
    return Kernel(radius=r, taps=taps, scale_t=float(t))


def convolve(frame, kernel: Kernel) -> ResponseMap:
    """Correlate a frame with a symmetric kernel, replicating edge pixels.

    For the symmetric kernels accepted here correlation equals convolution.
    """
    side = 2 * kernel.radius + 1
    if side > frame.width or side > frame.height:
        raise AnomscopeError(
            f"kernel size {side}x{side} exceeds frame size {frame.width}x{frame.height}"
        )
    values = ndimage.correlate(frame.data, kernel.taps, mode="nearest")
    return ResponseMap(
        width=frame.width, height=frame.height, values=values, scale_t=kernel.scale_t
    )


def _check_frame_for_response(frame, t: float) -> int:
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t > 0):
        raise AnomscopeError(f"gaussian variance t must be a positive number, got {t!r}")
    if frame.width < 3 or frame.height < 3:
        raise AnomscopeError(
            f"frame must be at least 3x3 for Laplacian responses, "
            f"got {frame.width}x{frame.height}"
        )
    r = default_radius(t)
    side = 2 * r + 1
    if side > frame.width or side > frame.height:
        raise AnomscopeError(
            f"kernel size {side}x{side} for t={t} exceeds frame size "
            f"{frame.width}x{frame.height}"
        )
    return r


def _smooth(data: np.ndarray, t: float, radius: int) -> np.ndarray:
    # Separable pass; with per-axis edge replication this equals correlating
    # with the full 2-D kernel because the replicated border clamps each
    # coordinate independently and the kernel is an outer product.
    g = _gaussian_taps_1d(t, radius)
    tmp = ndimage.correlate1d(data, g, axis=0, mode="nearest")
    return ndimage.correlate1d(tmp, g, axis=1, mode="nearest")


def log_response(frame, t: float) -> ResponseMap:
    """Smooth with the Gaussian of variance t, then apply the 5-point Laplacian."""
    r = _check_frame_for_response(frame, t)
    smoothed = _smooth(frame.data, t, r)
    values = ndimage.correlate(smoothed, LAPLACIAN_STENCIL, mode="nearest")
    return ResponseMap(width=frame.width, height=frame.height, values=values, scale_t=float(t))


def scale_normalized_log(frame, t: float) -> ResponseMap:
    """Laplacian-of-Gaussian response multiplied by t for cross-scale comparison."""
    raw = log_response(frame, t)
    return ResponseMap(
        width=raw.width, height=raw.height, values=float(t) * raw.values, scale_t=raw.scale_t
    )


def _validated_scales(scales) -> tuple[float, ...]:
    ts = tuple(float(s) for s in scales)
    if len(ts) < 3:
        raise AnomscopeError(
            f"need at least 3 scales so interior scales exist, got {len(ts)}"
        )
    if any(not (math.isfinite(t) and t > 0) for t in ts):
        raise AnomscopeError(f"scales must be positive and finite, got {ts}")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise AnomscopeError(f"scales must be strictly increasing, got {ts}")
    return ts


def _normalized_stack(frame, scales: tuple[float, ...]) -> np.ndarray:
    return np.stack([scale_normalized_log(frame, t).values for t in scales])


def _extrema_masks(stack: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Strict 26-neighbor dominance masks over interior scales and pixels.

    Returns (is_max, is_min) shaped like ``stack``; entries outside the
    interior are False.
    """
    n_scales, h, w = stack.shape
    center = stack[1:-1, 1:-1, 1:-1]
    is_max = np.abs(center) > threshold
    is_min = is_max.copy()
    for ds in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if ds == 0 and dy == 0 and dx == 0:
                    continue
                nb = stack[
                    1 + ds : n_scales - 1 + ds,
                    1 + dy : h - 1 + dy,
                    1 + dx : w - 1 + dx,
                ]
                is_max &= center > nb
                is_min &= center < nb
    full_max = np.zeros(stack.shape, dtype=bool)
    full_min = np.zeros(stack.shape, dtype=bool)
    full_max[1:-1, 1:-1, 1:-1] = is_max
    full_min[1:-1, 1:-1, 1:-1] = is_min
    return full_max, full_min


def detect_scale_space_extrema(
    frame, scales=DEFAULT_SCALES, threshold: float = DEFAULT_EXTREMUM_THRESHOLD
) -> list[Keypoint]:
    """Find strict local extrema of the normalized Laplacian in (x, y, t).

    A keypoint is an interior pixel at an interior scale whose normalized
    response strictly dominates all 26 neighbors in the 3x3x3 space-scale
    neighborhood and exceeds ``threshold`` in magnitude. Keypoints are
    ordered by ascending scale, then row-major position.
    """
    ts = _validated_scales(scales)
    if not (math.isfinite(threshold) and threshold >= 0.0):
        raise AnomscopeError(f"extremum threshold must be >= 0, got {threshold}")
    stack = _normalized_stack(frame, ts)
    is_max, is_min = _extrema_masks(stack, threshold)
    keypoints: list[Keypoint] = []
    for si in range(1, len(ts) - 1):
        either = is_max[si] | is_min[si]
        for y, x in zip(*np.nonzero(either)):
            keypoints.append(
                Keypoint(
                    x=int(x),
                    y=int(y),
                    scale_t=ts[si],
                    response=float(stack[si, y, x]),
                    polarity="max" if is_max[si, y, x] else "min",
                )
            )
    return keypoints


def log_descriptor(
    frame,
    scales=DEFAULT_SCALES,
    grid: tuple[int, int] = (4, 4),
    threshold: float = DEFAULT_EXTREMUM_THRESHOLD,
) -> np.ndarray:
    """Pooled multi-scale Laplacian statistics plus per-scale extremum rates.

    For each scale (outer order) and each grid cell in row-major order
    (inner), the descriptor holds (mean, std, max, min) of the normalized
    response over the cell. Appended are |scales| extremum counts divided by
    the pixel count; interior scales carry the detector counts and boundary
    scales are 0. Length: |scales| * rows * cols * 4 + |scales|.
    """
    ts = _validated_scales(scales)
    if not (math.isfinite(threshold) and threshold >= 0.0):
        raise AnomscopeError(f"extremum threshold must be >= 0, got {threshold}")
    rows, cols = int(grid[0]), int(grid[1])
    row_spans = split_spans(frame.height, rows)
    col_spans = split_spans(frame.width, cols)
    stack = _normalized_stack(frame, ts)
    parts: list[float] = []
    for si in range(len(ts)):
        values = stack[si]
        for y0, y1 in row_spans:
            for x0, x1 in col_spans:
                cell = values[y0:y1, x0:x1]
                parts.extend((cell.mean(), cell.std(), cell.max(), cell.min()))
    is_max, is_min = _extrema_masks(stack, threshold)
    either = is_max | is_min
    n_pixels = frame.width * frame.height
    counts = either.reshape(len(ts), -1).sum(axis=1) / float(n_pixels)
    parts.extend(counts.tolist())
    return np.asarray(parts, dtype=np.float64)
