"""Thermal frame primitives and PGM file I/O.

A frame is an immutable row-major grid of unsigned 16-bit intensity counts
(raw sensor units, deliberately uninterpreted). Both detection methods are
built from the pixel-level operations in this module: absolute differencing,
exact means, and the fixed 2x2 quadrant split.

PGM support covers P2 (ASCII) and P5 (binary) with maxval <= 65535. Binary
16-bit payloads are big-endian, most significant byte first, per the PGM
convention. Files are always written as 16-bit P5 with maxval 65535; 8-bit
inputs are widened on load without rescaling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

MAX_COUNT = 65535


class PgmError(ValueError):
    """Raised for malformed or unsupported PGM files."""


class QuadrantId(IntEnum):
    """Fixed row-major quadrant order, top-left first."""

    Q0 = 0  # top-left
    Q1 = 1  # top-right
    Q2 = 2  # bottom-left
    Q3 = 3  # bottom-right


class QuadRect(NamedTuple):
    """Pixel rectangle: offset of the top-left corner plus size."""

    x: int
    y: int
    width: int
    height: int


@dataclass(frozen=True, eq=False)
class ThermalFrame:
    """One radiometric image.

    `pixels` is a read-only (height, width) uint16 array. Dimensions must be
    even and at least 2 so the quadrant split is exact.
    """

    width: int
    height: int
    pixels: np.ndarray
    frame_index: int = 0
    timestamp_ms: float | None = None

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2 or self.width % 2 or self.height % 2:
            raise ValueError(
                f"frame dimensions must be even and >= 2, got {self.width}x{self.height}"
            )
        arr = np.asarray(self.pixels)
        if arr.ndim == 2 and arr.shape != (self.height, self.width):
            raise ValueError(
                f"pixel grid shape {arr.shape} does not match {self.height}x{self.width}"
            )
        if arr.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} pixels, got {arr.size}"
            )
        if arr.dtype != np.uint16:
            if arr.size and (int(arr.min()) < 0 or int(arr.max()) > MAX_COUNT):
                raise ValueError(f"pixel values must be within 0..{MAX_COUNT}")
            arr = arr.astype(np.uint16)
        arr = arr.reshape(self.height, self.width).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)


@dataclass(frozen=True)
class FrameStats:
    mean: float
    min: int
    max: int


def frame_stats(frame: ThermalFrame) -> FrameStats:
    return FrameStats(
        mean=frame_mean(frame),
        min=int(frame.pixels.min()),
        max=int(frame.pixels.max()),
    )


def abs_diff(a: ThermalFrame, b: ThermalFrame) -> ThermalFrame:
    """Per-pixel |a - b|. Index and timestamp are carried from `a`."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    diff = np.abs(a.pixels.astype(np.int32) - b.pixels.astype(np.int32))
    return ThermalFrame(
        a.width, a.height, diff.astype(np.uint16), a.frame_index, a.timestamp_ms
    )


def frame_mean(frame: ThermalFrame) -> float:
    # exact 64-bit integer sum, then a single double-precision division
    return int(frame.pixels.sum(dtype=np.int64)) / frame.pixels.size


def split_quadrants(frame: ThermalFrame) -> dict[QuadrantId, QuadRect]:
    """Four non-overlapping (width/2)x(height/2) rectangles tiling the frame."""
    hw, hh = frame.width // 2, frame.height // 2
    return {
        QuadrantId.Q0: QuadRect(0, 0, hw, hh),
        QuadrantId.Q1: QuadRect(hw, 0, hw, hh),
        QuadrantId.Q2: QuadRect(0, hh, hw, hh),
        QuadrantId.Q3: QuadRect(hw, hh, hw, hh),
    }


def quadrant_view(frame: ThermalFrame, quadrant: QuadrantId) -> np.ndarray:
    """Read-only pixel view of one quadrant."""
    r = split_quadrants(frame)[quadrant]
    return frame.pixels[r.y : r.y + r.height, r.x : r.x + r.width]


def load_pgm(path: str | Path) -> ThermalFrame:
    """Load a P2 or P5 PGM file.

    8-bit files (maxval < 256) are widened to 16-bit storage without
    rescaling: a stored 255 stays 255.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise PgmError(f"{path}: not a P2/P5 PGM file")
    tokens, pos = _header_tokens(path, data)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmError(f"{path}: malformed header") from None
    if not 0 < maxval <= MAX_COUNT:
        raise PgmError(f"{path}: unsupported maxval {maxval}")
    if width < 2 or height < 2 or width % 2 or height % 2:
        raise PgmError(
            f"{path}: dimensions must be even and >= 2, got {width}x{height}"
        )
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise PgmError(f"{path}: missing whitespace after maxval")
        payload = data[pos + 1 :]
        itemsize = 2 if maxval > 255 else 1
        if len(payload) != count * itemsize:
            raise PgmError(
                f"{path}: expected {count * itemsize} payload bytes, got {len(payload)}"
            )
        values = np.frombuffer(payload, dtype=">u2" if itemsize == 2 else np.uint8)
        values = values.astype(np.uint16)
    else:
        text = re.sub(rb"#[^\n]*", b"", data[pos:])
        try:
            parsed = [int(t) for t in text.split()]
        except ValueError:
            raise PgmError(f"{path}: non-numeric sample in P2 payload") from None
        if len(parsed) != count:
            raise PgmError(f"{path}: expected {count} samples, got {len(parsed)}")
        if parsed and (min(parsed) < 0 or max(parsed) > MAX_COUNT):
            raise PgmError(f"{path}: sample out of range")
        values = np.asarray(parsed, dtype=np.uint16)
    if values.size and int(values.max()) > maxval:
        raise PgmError(f"{path}: sample {int(values.max())} exceeds maxval {maxval}")
    return ThermalFrame(width, height, values)


def write_pgm(frame: ThermalFrame, path: str | Path) -> None:
    """Write a frame as binary 16-bit P5 with maxval 65535 (big-endian)."""
    header = f"P5\n{frame.width} {frame.height}\n{MAX_COUNT}\n".encode("ascii")
    Path(path).write_bytes(header + frame.pixels.astype(">u2").tobytes())


def replay_dir(path: str | Path, pattern: str = "*.pgm") -> Iterator[ThermalFrame]:
    """Yield frames from a directory in lexicographic filename order.

    Frame indices are (re)assigned sequentially from 0, which makes the file
    order the stream order. A dimension change mid-stream is an error.
    """
    dims: tuple[int, int] | None = None
    for index, file in enumerate(sorted(Path(path).glob(pattern))):
        frame = load_pgm(file)
        if dims is None:
            dims = (frame.width, frame.height)
        elif (frame.width, frame.height) != dims:
            raise PgmError(
                f"{file}: dimension change mid-stream, "
                f"{frame.width}x{frame.height} after {dims[0]}x{dims[1]}"
            )
        yield replace(frame, frame_index=index)


def _header_tokens(path: Path, data: bytes) -> tuple[list[bytes], int]:
    """First four whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the byte offset just past the last one.
    """
    tokens: list[bytes] = []
    i, n = 0, len(data)
    while len(tokens) < 4:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        if i >= n:
            raise PgmError(f"{path}: truncated header")
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j] != ord("#"):
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i
