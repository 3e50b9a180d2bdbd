"""Region-of-interest detection over frame quadrants (method B).

Stateless per frame: a quadrant is flagged when its mean intensity is more
than `ratio` times the whole-frame mean (default: 20% above it) and also
meets an absolute floor that keeps near-black frames negative. Unlike the
movement detector this catches stationary people, but a body of heat
centered on the frame splits its mass across all four quadrants and can
fall below the ratio everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .frame import QuadrantId, ThermalFrame, split_quadrants


@dataclass(frozen=True)
class RoiConfig:
    """ratio: quadrant mean must exceed ratio * frame mean (strict).
    min_quadrant_mean: absolute floor on the quadrant mean, in counts."""

    ratio: float = 1.20
    min_quadrant_mean: int = 1

    def __post_init__(self) -> None:
        if self.ratio < 1.0:
            raise ValueError("ratio must be >= 1.0")
        if self.min_quadrant_mean < 0:
            raise ValueError("min_quadrant_mean must be >= 0")


@dataclass(frozen=True)
class RoiResult:
    frame_mean: float
    quadrant_means: Mapping[QuadrantId, float]
    flags: Mapping[QuadrantId, bool]
    any: bool


def roi_analyze(frame: ThermalFrame, config: RoiConfig | None = None) -> RoiResult:
    """Flag quadrants whose mean stands out against the whole frame.

    The flag rule is evaluated in exact integer arithmetic so that "more
    than 20% above the mean" is strict at the decimal boundary: with
    quadrant pixel count n and frame sum F, mean_q > ratio * mean_frame
    reduces to 4 * sum_q > ratio * F, and the ratio is taken as the decimal
    the caller wrote (1.2 is exactly 6/5, not its binary float image).
    """
    cfg = config or RoiConfig()
    rects = split_quadrants(frame)
    quad_count = (frame.width // 2) * (frame.height // 2)

    sums: dict[QuadrantId, int] = {}
    for qid, r in rects.items():
        view = frame.pixels[r.y : r.y + r.height, r.x : r.x + r.width]
        sums[qid] = int(view.sum(dtype=np.int64))
    total = sum(sums.values())

    ratio = Fraction(str(cfg.ratio))
    floor = cfg.min_quadrant_mean * quad_count
    flags = {
        qid: (4 * s > ratio * total) and (s >= floor) for qid, s in sums.items()
    }
    return RoiResult(
        frame_mean=total / (4 * quad_count),
        quadrant_means={qid: s / quad_count for qid, s in sums.items()},
        flags=flags,
        any=any(flags.values()),
    )
