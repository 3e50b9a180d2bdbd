"""Deterministic synthetic thermal scenes with ground-truth labels.

Heat sources are isotropic Gaussian blobs moving along piecewise-linear
waypoint paths over a uniform ambient field with optional per-frame drift
and Gaussian pixel noise. Identical spec and seed give a bit-identical
dataset, which makes generated scenes usable as replay oracles for the
detection pipeline.

Noise is specified exactly so a dataset can be re-derived outside this
codebase. With mix64 the splitmix64 finalizer and G = 0x9E3779B97F4A7C15:
the stream for frame t starts from f = mix64((seed + (t+1)*G) mod 2^64);
draw k of that frame is z_k = mix64((f + (k+1)*G) mod 2^64); uniforms in
(0, 1] are u_k = ((z_k >> 11) + 1) * 2^-53; consecutive uniform pairs are
turned into standard normals with the Box-Muller transform. Pixel values
are rounded to nearest and clamped to 0..65535.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluate import GroundTruthLabel, write_labels
from .frame import QuadrantId, ThermalFrame, write_pgm

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SceneError(ValueError):
    """Raised for invalid scene specifications or scene files."""


@dataclass(frozen=True)
class BlobSpec:
    """One Gaussian heat source.

    `path` holds (frame_index, center_x, center_y) waypoints with linear
    interpolation between them; before the first and after the last
    waypoint the blob parks at that endpoint, so a single waypoint makes a
    static source. Centers may lie outside the frame (a person out of
    view); only the in-frame Gaussian tail is rendered.
    """

    amplitude: float
    sigma: float
    path: tuple[tuple[int, float, float], ...]
    is_human: bool = True

    def __post_init__(self) -> None:
        if self.amplitude <= 0:
            raise SceneError("blob amplitude must be positive")
        if self.sigma <= 0:
            raise SceneError("blob sigma must be positive")
        if not self.path:
            raise SceneError("blob path needs at least one waypoint")
        times = [t for t, _, _ in self.path]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SceneError("waypoint frame indices must strictly increase")


@dataclass(frozen=True)
class SceneSpec:
    frames: int
    width: int = 160
    height: int = 120
    fps: float = 4.0
    ambient: float = 0.0
    drift_per_frame: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    blobs: tuple[BlobSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.frames < 1:
            raise SceneError("scene needs at least one frame")
        if self.width < 2 or self.height < 2 or self.width % 2 or self.height % 2:
            raise SceneError("scene dimensions must be even and >= 2")
        if self.fps <= 0:
            raise SceneError("fps must be positive")
        if self.noise_sigma < 0:
            raise SceneError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class LabeledDataset:
    directory: Path
    labels_path: Path
    frame_paths: tuple[Path, ...]
    labels: tuple[GroundTruthLabel, ...]


def blob_center(blob: BlobSpec, frame_index: int) -> tuple[float, float]:
    """Center position at a frame: linear between waypoints, clamped at the ends."""
    path = blob.path
    if frame_index <= path[0][0]:
        return path[0][1], path[0][2]
    for (t0, x0, y0), (t1, x1, y1) in zip(path, path[1:]):
        if frame_index <= t1:
            s = (frame_index - t0) / (t1 - t0)
            return x0 + s * (x1 - x0), y0 + s * (y1 - y0)
    return path[-1][1], path[-1][2]


def _mix64(z: np.ndarray) -> np.ndarray:
    # vectorized splitmix64 finalizer; uint64 arithmetic wraps mod 2^64
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def standard_normals(seed: int, frame_index: int, count: int) -> np.ndarray:
    """The frame's noise substream as standard normals (see module docstring)."""
    frame_seed = _mix64_int((seed + (frame_index + 1) * _GOLDEN) & _MASK64)
    pairs = (count + 1) // 2
    ks = np.arange(1, 2 * pairs + 1, dtype=np.uint64)
    z = _mix64(np.uint64(frame_seed) + ks * np.uint64(_GOLDEN))
    u = ((z >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = 2.0 * math.pi * u[1::2]
    normals = np.empty(2 * pairs)
    normals[0::2] = radius * np.cos(theta)
    normals[1::2] = radius * np.sin(theta)
    return normals[:count]


def render_frame(spec: SceneSpec, frame_index: int) -> ThermalFrame:
    """Render one frame of the scene."""
    xs = np.arange(spec.width, dtype=np.float64)
    ys = np.arange(spec.height, dtype=np.float64)[:, None]
    field = np.full(
        (spec.height, spec.width),
        spec.ambient + frame_index * spec.drift_per_frame,
        dtype=np.float64,
    )
    for blob in spec.blobs:
        cx, cy = blob_center(blob, frame_index)
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        field += blob.amplitude * np.exp(-d2 / (2.0 * blob.sigma**2))
    if spec.noise_sigma > 0:
        noise = standard_normals(spec.seed, frame_index, field.size)
        field += spec.noise_sigma * noise.reshape(field.shape)
    pixels = np.clip(np.rint(field), 0, 65535).astype(np.uint16)
    return ThermalFrame(
        spec.width,
        spec.height,
        pixels,
        frame_index=frame_index,
        timestamp_ms=frame_index * 1000.0 / spec.fps,
    )


def frame_label(spec: SceneSpec, frame_index: int) -> GroundTruthLabel:
    """Ground truth from blob-center geometry.

    A frame is positive when any human blob's center lies inside the frame;
    the occupied quadrants are those containing such centers (midline
    coordinates belong to the right/bottom half).
    """
    occupied: set[QuadrantId] = set()
    for blob in spec.blobs:
        if not blob.is_human:
            continue
        cx, cy = blob_center(blob, frame_index)
        if 0 <= cx < spec.width and 0 <= cy < spec.height:
            qx = 0 if cx < spec.width / 2 else 1
            qy = 0 if cy < spec.height / 2 else 1
            occupied.add(QuadrantId(qy * 2 + qx))
    return GroundTruthLabel(frame_index, bool(occupied), frozenset(occupied))


def generate(spec: SceneSpec, out_dir: str | Path) -> LabeledDataset:
    """Write the scene as PGM frames plus a labels CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    labels: list[GroundTruthLabel] = []
    for t in range(spec.frames):
        path = out / f"frame_{t:06d}.pgm"
        write_pgm(render_frame(spec, t), path)
        paths.append(path)
        labels.append(frame_label(spec, t))
    labels_path = out / "labels.csv"
    write_labels(labels, labels_path)
    return LabeledDataset(out, labels_path, tuple(paths), tuple(labels))


_SCENE_KEYS = {
    "width": int,
    "height": int,
    "frames": int,
    "fps": float,
    "ambient": float,
    "drift": float,
    "noise_sigma": float,
    "seed": int,
}
_KEY_TO_FIELD = {"drift": "drift_per_frame"}


def parse_scene(text: str) -> SceneSpec:
    """Parse a scene file.

    key=value lines for the scalar settings (width, height, frames, fps,
    ambient, drift, noise_sigma, seed) plus one line per blob:

        blob=<amplitude>,<sigma>,<human|object>,<t:x:y>[,<t:x:y>...]

    `#` starts a comment.
    """
    settings: dict[str, object] = {}
    blobs: list[BlobSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SceneError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "blob":
            blobs.append(_parse_blob(lineno, value))
        elif key in _SCENE_KEYS:
            try:
                parsed = _SCENE_KEYS[key](value)
            except ValueError:
                raise SceneError(f"line {lineno}: bad value for {key}: {value!r}") from None
            settings[_KEY_TO_FIELD.get(key, key)] = parsed
        else:
            raise SceneError(f"line {lineno}: unknown key {key!r}")
    if "frames" not in settings:
        raise SceneError("scene file must set frames")
    return SceneSpec(blobs=tuple(blobs), **settings)  # type: ignore[arg-type]


def _parse_blob(lineno: int, value: str) -> BlobSpec:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) < 4:
        raise SceneError(
            f"line {lineno}: blob needs amplitude, sigma, kind and waypoints"
        )
    try:
        amplitude = float(parts[0])
        sigma = float(parts[1])
    except ValueError:
        raise SceneError(f"line {lineno}: bad blob numbers {value!r}") from None
    kind = parts[2].lower()
    if kind not in ("human", "object"):
        raise SceneError(f"line {lineno}: blob kind must be human or object")
    waypoints = []
    for part in parts[3:]:
        fields = part.split(":")
        if len(fields) != 3:
            raise SceneError(f"line {lineno}: waypoint must be t:x:y, got {part!r}")
        try:
            waypoints.append((int(fields[0]), float(fields[1]), float(fields[2])))
        except ValueError:
            raise SceneError(f"line {lineno}: bad waypoint {part!r}") from None
    return BlobSpec(
        amplitude=amplitude,
        sigma=sigma,
        path=tuple(waypoints),
        is_human=kind == "human",
    )
