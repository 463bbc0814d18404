"""Uniform local binary patterns over 8-neighborhoods.

An 8-bit code is read from the neighbors of an interior pixel, visited
clockwise starting at the top-left neighbor; the first neighbor lands in the
most significant bit. A bit is 0 where the center is strictly greater than
the neighbor and 1 otherwise, so ties record 1. Codes whose circular bit
string has at most two 0-1 / 1-0 transitions are "uniform"; each uniform
code gets its own histogram bin (bins ordered by ascending code value) and
all other codes share the final bin, giving 59 bins total.
"""

from __future__ import annotations

import numpy as np

from ._util import split_spans
from .errors import AnomscopeError

# (dx, dy) clockwise from the top-left neighbor; first entry = most significant bit
NEIGHBOR_OFFSETS = (
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
)

N_BINS = 59
NON_UNIFORM_BIN = 58


def circular_transitions(code: int) -> int:
    """Number of bit changes around the 8-bit cycle, wrapping bit 7 to bit 0."""
    if not (isinstance(code, (int, np.integer)) and 0 <= code <= 255):
        raise AnomscopeError(f"LBP code must be an integer in [0, 255], got {code!r}")
    rotated = ((code << 1) | (code >> 7)) & 0xFF
    return int(bin(code ^ rotated).count("1"))


UNIFORM_CODES = tuple(c for c in range(256) if circular_transitions(c) <= 2)

_BIN_OF_CODE = np.full(256, NON_UNIFORM_BIN, dtype=np.int64)
for _i, _c in enumerate(UNIFORM_CODES):
    _BIN_OF_CODE[_c] = _i


def uniform_bin_index(code: int) -> int:
    """Histogram bin for a code: uniform codes 0..57 by value, else 58."""
    if not (isinstance(code, (int, np.integer)) and 0 <= code <= 255):
        raise AnomscopeError(f"LBP code must be an integer in [0, 255], got {code!r}")
    return int(_BIN_OF_CODE[code])


def _codes_region(data: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Codes for the half-open pixel rectangle; all pixels must be interior."""
    center = data[y0:y1, x0:x1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for dx, dy in NEIGHBOR_OFFSETS:
        neighbor = data[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
        codes = (codes << 1) | (center <= neighbor)
    return codes


def _check_interior_rect(frame, x0: int, y0: int, x1: int, y1: int) -> None:
    if not (1 <= x0 < x1 <= frame.width - 1 and 1 <= y0 < y1 <= frame.height - 1):
        raise AnomscopeError(
            f"cell ({x0}, {y0}, {x1}, {y1}) must be a non-empty rectangle of "
            f"interior pixels of a {frame.width}x{frame.height} frame"
        )


def lbp_code(frame, x: int, y: int) -> int:
    """The 8-bit pattern at one interior pixel."""
    if not (1 <= x <= frame.width - 2 and 1 <= y <= frame.height - 2):
        raise AnomscopeError(
            f"pixel ({x}, {y}) has no full 8-neighborhood in a "
            f"{frame.width}x{frame.height} frame"
        )
    return int(_codes_region(frame.data, x, y, x + 1, y + 1)[0, 0])


def code_map(frame) -> np.ndarray:
    """Codes for every interior pixel, shape (height - 2, width - 2)."""
    if frame.width < 3 or frame.height < 3:
        raise AnomscopeError(
            f"frame must be at least 3x3 for LBP codes, got {frame.width}x{frame.height}"
        )
    return _codes_region(frame.data, 1, 1, frame.width - 1, frame.height - 1)


def cell_histogram(frame, cell: tuple[int, int, int, int]) -> np.ndarray:
    """L1-normalized 59-bin histogram of codes in a half-open pixel rectangle.

    ``cell`` is (x0, y0, x1, y1) in frame coordinates; every pixel in it must
    have a full 8-neighborhood.
    """
    x0, y0, x1, y1 = (int(v) for v in cell)
    _check_interior_rect(frame, x0, y0, x1, y1)
    codes = _codes_region(frame.data, x0, y0, x1, y1)
    counts = np.bincount(_BIN_OF_CODE[codes.ravel()], minlength=N_BINS)
    return counts.astype(np.float64) / float(counts.sum())


def lbp_descriptor(frame, grid: tuple[int, int] = (4, 4)) -> np.ndarray:
    """Concatenated cell histograms over a grid covering all interior pixels.

    The interior (width - 2) x (height - 2) region is split into a
    rows x cols grid; cell histograms are concatenated in row-major order.
    Length: rows * cols * 59.
    """
    rows, cols = int(grid[0]), int(grid[1])
    if frame.width < 3 or frame.height < 3:
        raise AnomscopeError(
            f"frame must be at least 3x3 for LBP codes, got {frame.width}x{frame.height}"
        )
    row_spans = split_spans(frame.height - 2, rows)
    col_spans = split_spans(frame.width - 2, cols)
    hists = [
        cell_histogram(frame, (x0 + 1, y0 + 1, x1 + 1, y1 + 1))
        for y0, y1 in row_spans
        for x0, x1 in col_spans
    ]
    return np.concatenate(hists)
