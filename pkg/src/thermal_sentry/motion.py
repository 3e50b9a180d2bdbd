"""Movement detection by background subtraction (method A).

The first frame of a stream seeds the reference background. Every later
frame is differenced against it pixel by pixel; pixels whose absolute
difference reaches `active_pixel_delta` are "active", and the frame signals
movement when the active count reaches the configured fraction of all
pixels. A frame without movement replaces the background, so slow ambient
changes (sunlight, daily temperature swings) are absorbed instead of
accumulating into false positives. Static heat sources never move relative
to the background and are therefore ignored after the first frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .frame import ThermalFrame, abs_diff


@dataclass(frozen=True)
class MotionConfig:
    """Tunables for the movement detector.

    active_pixel_delta: per-pixel |frame - background| threshold, in counts.
    active_fraction: fraction of all pixels that must be active before the
        frame counts as movement (0.05 means "at least 5%").
    max_hold_frames: optional forced-refresh limit. After this many
        consecutive movement frames the background is replaced anyway, so a
        permanently rearranged scene cannot pin the detector positive.
    """

    active_pixel_delta: int = 20
    active_fraction: float = 0.05
    max_hold_frames: int | None = None

    def __post_init__(self) -> None:
        if self.active_pixel_delta < 1:
            raise ValueError("active_pixel_delta must be >= 1")
        if not 0.0 < self.active_fraction <= 1.0:
            raise ValueError("active_fraction must be in (0, 1]")
        if self.max_hold_frames is not None and self.max_hold_frames < 1:
            raise ValueError("max_hold_frames must be positive when set")


@dataclass(frozen=True)
class MotionResult:
    """Outcome of one detector step.

    `indeterminate` is True only for the very first frame, which has no
    reference to compare against. `forced_refresh` marks background
    replacements triggered by `max_hold_frames` rather than by a quiet frame.
    """

    movement: bool
    active_count: int
    required_count: int
    background_updated: bool
    indeterminate: bool
    forced_refresh: bool = False


@dataclass
class MotionState:
    """Mutable per-stream detector state. One instance per frame stream;
    not safe for concurrent mutation."""

    config: MotionConfig
    background: ThermalFrame | None = None
    frames_since_update: int = 0


def motion_init(config: MotionConfig | None = None) -> MotionState:
    """Fresh state with no background yet."""
    return MotionState(config=config or MotionConfig())


def required_active_count(fraction: float | Fraction, pixel_count: int) -> int:
    """Smallest active-pixel count satisfying "at least `fraction` of all".

    The ceiling is taken over the decimal value the caller wrote, not over
    its binary float image: 0.07 * 100 must require 7 pixels, not
    ceil(7.000000000000001) = 8.
    """
    if not isinstance(fraction, Fraction):
        fraction = Fraction(str(fraction))
    return math.ceil(fraction * pixel_count)


def motion_step(state: MotionState, frame: ThermalFrame) -> MotionResult:
    """Advance the detector by one frame, mutating `state`.

    Background bookkeeping: a quiet frame always becomes the new background;
    a movement frame leaves it untouched (updating it would absorb the
    intruder) unless the optional hold limit has been exceeded.
    """
    cfg = state.config
    required = required_active_count(cfg.active_fraction, frame.width * frame.height)
    if state.background is None:
        state.background = frame
        state.frames_since_update = 0
        return MotionResult(
            movement=False,
            active_count=0,
            required_count=required,
            background_updated=True,
            indeterminate=True,
        )

    background = state.background
    if (frame.width, frame.height) != (background.width, background.height):
        raise ValueError(
            f"frame {frame.width}x{frame.height} does not match background "
            f"{background.width}x{background.height}"
        )
    diff = abs_diff(frame, background)
    active = int(np.count_nonzero(diff.pixels >= cfg.active_pixel_delta))
    movement = active >= required

    forced = False
    if not movement:
        state.background = frame
        state.frames_since_update = 0
    else:
        state.frames_since_update += 1
        if (
            cfg.max_hold_frames is not None
            and state.frames_since_update > cfg.max_hold_frames
        ):
            state.background = frame
            state.frames_since_update = 0
            forced = True

    return MotionResult(
        movement=movement,
        active_count=active,
        required_count=required,
        background_updated=not movement or forced,
        indeterminate=False,
        forced_refresh=forced,
    )
