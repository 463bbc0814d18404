"""Frame and label ingestion.

Frames are single-channel images with intensities scaled to [0, 1].
Supported containers are PGM (binary P5 or ASCII P2) and PNG, carrying
either 8-bit grayscale or 24-bit RGB pixels. RGB is reduced to luminance
with the BT.601 weights 0.299 / 0.587 / 0.114.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import AnomscopeError

IMAGE_SUFFIXES = (".pgm", ".png")
_SUPPORTED_FORMATS = {"PPM", "PNG"}  # Pillow reports PGM files as format "PPM"

LABELS_HEADER = ("frame_index", "label")


@dataclass(frozen=True, eq=False)
class Frame:
    """A single grayscale frame.

    ``data`` is float64 with shape (height, width) and values in [0, 1].
    """

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise AnomscopeError(
                f"frame dimensions must be positive, got {self.width}x{self.height}"
            )
        if self.data.ndim != 2 or self.data.shape != (self.height, self.width):
            raise AnomscopeError(
                f"frame data shape {self.data.shape} does not match "
                f"declared size {self.width}x{self.height}"
            )
        if not np.all(np.isfinite(self.data)):
            raise AnomscopeError("frame intensities must be finite")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise AnomscopeError("frame intensities must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class LabeledSequence:
    """An ordered run of equally sized frames with one 0/1 label each."""

    frames: tuple[Frame, ...]
    labels: tuple[int, ...]
    source_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.frames) == 0:
            raise AnomscopeError("a sequence must contain at least one frame")
        if not (len(self.frames) == len(self.labels) == len(self.source_ids)):
            raise AnomscopeError(
                f"sequence length mismatch: {len(self.frames)} frames, "
                f"{len(self.labels)} labels, {len(self.source_ids)} ids"
            )
        if any(lbl not in (0, 1) for lbl in self.labels):
            raise AnomscopeError("labels must be 0 (normal) or 1 (anomalous)")
        w, h = self.frames[0].width, self.frames[0].height
        for fid, frame in zip(self.source_ids, self.frames):
            if (frame.width, frame.height) != (w, h):
                raise AnomscopeError(
                    f"frame size mismatch: {fid} is {frame.width}x{frame.height}, "
                    f"expected {w}x{h}"
                )

    def __len__(self) -> int:
        return len(self.frames)


def frame_from_array(data: np.ndarray) -> Frame:
    """Wrap a 2-D array of intensities in [0, 1] as a Frame."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise AnomscopeError(f"frame data must be 2-D, got shape {arr.shape}")
    return Frame(width=arr.shape[1], height=arr.shape[0], data=arr)


def load_frame(path) -> Frame:
    """Load one PGM or PNG image as a [0, 1] grayscale frame."""
    p = Path(path)
    try:
        with Image.open(p) as im:
            fmt = im.format
            if fmt not in _SUPPORTED_FORMATS:
                raise AnomscopeError(
                    f"unsupported image format {fmt!r} for {p}: expected PGM or PNG"
                )
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
            elif mode == "RGB":
                rgb = np.asarray(im, dtype=np.float64)
                # integer-weight BT.601 form: exact 1.0 for pure white
                arr = (299.0 * rgb[..., 0] + 587.0 * rgb[..., 1] + 114.0 * rgb[..., 2]) / 255000.0
            else:
                raise AnomscopeError(
                    f"unsupported pixel mode {mode!r} in {p}: "
                    "expected 8-bit grayscale or 24-bit RGB"
                )
    except FileNotFoundError:
        raise AnomscopeError(f"cannot read image {p}: file not found") from None
    except UnidentifiedImageError:
        raise AnomscopeError(f"unsupported or corrupt image file: {p}") from None
    except OSError as exc:
        raise AnomscopeError(f"cannot read image {p}: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise AnomscopeError(f"image {p} has no pixels")
    return Frame(width=arr.shape[1], height=arr.shape[0], data=arr)


def list_frame_files(frames_dir) -> list[Path]:
    """Image files under ``frames_dir``, in lexicographic filename order."""
    d = Path(frames_dir)
    if not d.is_dir():
        raise AnomscopeError(f"not a directory: {d}")
    files = sorted(
        (p for p in d.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )
    if not files:
        raise AnomscopeError(f"no .pgm or .png frames found in {d}")
    return files


def load_frames(frames_dir) -> tuple[list[Frame], list[str]]:
    """Load every frame in a directory; all frames must share one size."""
    files = list_frame_files(frames_dir)
    frames = [load_frame(p) for p in files]
    w, h = frames[0].width, frames[0].height
    for path, frame in zip(files, frames):
        if (frame.width, frame.height) != (w, h):
            raise AnomscopeError(
                f"frame size mismatch: {path.name} is {frame.width}x{frame.height}, "
                f"expected {w}x{h} from {files[0].name}"
            )
    return frames, [p.name for p in files]


def read_label_rows(labels_path) -> dict[int, int]:
    """Parse a frame_index,label CSV into an index-to-label mapping."""
    p = Path(labels_path)
    if not p.is_file():
        raise AnomscopeError(f"labels file not found: {p}")
    with open(p, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if row]
    if not rows or tuple(cell.strip() for cell in rows[0]) != LABELS_HEADER:
        raise AnomscopeError(
            f"labels file {p} must start with header 'frame_index,label'"
        )
    labels: dict[int, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise AnomscopeError(f"{p}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            idx = int(row[0].strip())
            label = int(row[1].strip())
        except ValueError:
            raise AnomscopeError(f"{p}:{lineno}: non-integer frame_index or label") from None
        if idx < 0:
            raise AnomscopeError(f"{p}:{lineno}: frame_index must be >= 0, got {idx}")
        if label not in (0, 1):
            raise AnomscopeError(
                f"{p}:{lineno}: label must be 0 or 1, got {label} for frame_index {idx}"
            )
        if idx in labels:
            raise AnomscopeError(f"{p}:{lineno}: duplicate frame_index {idx}")
        labels[idx] = label
    if not labels:
        raise AnomscopeError(f"labels file {p} has no label rows")
    return labels


def read_labels(labels_path, n_frames: int) -> list[int]:
    """Read a frame_index,label CSV covering exactly frames 0..n_frames-1."""
    labels = read_label_rows(labels_path)
    if len(labels) != n_frames:
        raise AnomscopeError(
            f"label count mismatch: {labels_path} has {len(labels)} labels "
            f"for {n_frames} frames"
        )
    missing = [i for i in range(n_frames) if i not in labels]
    if missing:
        raise AnomscopeError(f"missing label for frame_index {missing[0]} in {labels_path}")
    return [labels[i] for i in range(n_frames)]


def load_sequence(frames_dir, labels_path) -> LabeledSequence:
    """Load a frame directory plus its labels CSV as one labeled sequence."""
    frames, names = load_frames(frames_dir)
    labels = read_labels(labels_path, len(frames))
    return LabeledSequence(
        frames=tuple(frames), labels=tuple(labels), source_ids=tuple(names)
    )


def write_pgm(frame: Frame, path) -> None:
    """Write a frame as binary 8-bit PGM, rounding intensities to 256 levels."""
    data = np.rint(frame.data * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
