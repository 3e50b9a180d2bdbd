"""Quadrant zone classes and the safety state machine.

Each quadrant is classed Ignore, Warning or Critical. Debounced quadrant
occupancy drives a three-state machine ordered Run < Slow < Stop: any
occupied Critical quadrant demands Stop, otherwise any occupied Warning
quadrant demands Slow. A positive detection without quadrant localization
(movement only) holds the state at Slow for one debounce window, never
Stop, because there is no quadrant to blame.

Occupancy is debounced in both directions: a quadrant must be flagged for
`debounce_frames` consecutive frames to count as occupied, and must then be
flag-free for `clear_frames` consecutive frames to release. At the paper's
class of capture rates (a few frames per second) this suppresses
single-frame chatter without adding meaningful reaction delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Mapping

from .frame import QuadrantId
from .hybrid import Detection


class ZoneClass(Enum):
    IGNORE = "ignore"
    WARNING = "warning"
    CRITICAL = "critical"


class SafetyState(IntEnum):
    # ordered by severity; max() picks the more restrictive state
    RUN = 0
    SLOW = 1
    STOP = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


class ZoneEventKind(Enum):
    ENTERED = "Entered"
    CLEARED = "Cleared"
    STATE_CHANGED = "StateChanged"


@dataclass(frozen=True)
class ZoneEvent:
    frame_index: int
    kind: ZoneEventKind
    quadrant: QuadrantId | None = None
    from_state: SafetyState | None = None
    to_state: SafetyState | None = None


class ZoneConfigError(ValueError):
    """Raised for unparseable zone configuration text."""


def _all_ignore() -> dict[QuadrantId, ZoneClass]:
    return {q: ZoneClass.IGNORE for q in QuadrantId}


@dataclass(frozen=True)
class ZoneConfig:
    zone_class: Mapping[QuadrantId, ZoneClass] = field(default_factory=_all_ignore)
    debounce_frames: int = 3
    clear_frames: int = 3

    def __post_init__(self) -> None:
        if set(self.zone_class) != set(QuadrantId):
            raise ValueError("zone_class must map every quadrant")
        if self.debounce_frames < 1:
            raise ValueError("debounce_frames must be >= 1")
        if self.clear_frames < 1:
            raise ValueError("clear_frames must be >= 1")


@dataclass
class ZoneState:
    """Mutable per-stream occupancy and state-machine memory."""

    state: SafetyState = SafetyState.RUN
    flag_streak: dict[QuadrantId, int] = field(
        default_factory=lambda: {q: 0 for q in QuadrantId}
    )
    clear_streak: dict[QuadrantId, int] = field(
        default_factory=lambda: {q: 0 for q in QuadrantId}
    )
    occupied: set[QuadrantId] = field(default_factory=set)
    unlocalized_hold: int = 0


def zone_update(
    state: ZoneState, detection: Detection, config: ZoneConfig
) -> tuple[SafetyState, list[ZoneEvent]]:
    """Advance occupancy and the safety state by one frame, mutating `state`.

    Returns the state in force after this frame plus the events emitted for
    it (quadrant transitions first, then the state change, if any).
    """
    roi = detection.roi
    if roi is None:
        raise ValueError("detection carries no quadrant analysis")
    index = detection.frame_index
    events: list[ZoneEvent] = []

    for q in QuadrantId:
        if roi.flags[q]:
            state.flag_streak[q] += 1
            state.clear_streak[q] = 0
            if q not in state.occupied and state.flag_streak[q] >= config.debounce_frames:
                state.occupied.add(q)
                events.append(ZoneEvent(index, ZoneEventKind.ENTERED, quadrant=q))
        else:
            state.clear_streak[q] += 1
            state.flag_streak[q] = 0
            if q in state.occupied and state.clear_streak[q] >= config.clear_frames:
                state.occupied.discard(q)
                events.append(ZoneEvent(index, ZoneEventKind.CLEARED, quadrant=q))

    if detection.verdict and not roi.any:
        # movement with no quadrant to localize: hold at least Slow for one
        # debounce window starting at this frame
        state.unlocalized_hold = config.debounce_frames

    target = SafetyState.RUN
    if any(config.zone_class[q] is ZoneClass.CRITICAL for q in state.occupied):
        target = SafetyState.STOP
    elif any(config.zone_class[q] is ZoneClass.WARNING for q in state.occupied):
        target = SafetyState.SLOW
    if state.unlocalized_hold > 0:
        target = max(target, SafetyState.SLOW)
        state.unlocalized_hold -= 1

    if target is not state.state:
        events.append(
            ZoneEvent(
                index,
                ZoneEventKind.STATE_CHANGED,
                from_state=state.state,
                to_state=target,
            )
        )
        state.state = target
    return target, events


def parse_zone_config(text: str) -> ZoneConfig:
    """Parse zone configuration text.

    One `Qn=ignore|warning|critical` per line, optional `debounce=<int>` and
    `clear=<int>` lines, `#` comments, case-insensitive. Quadrants not
    mentioned default to Ignore.
    """
    classes = _all_ignore()
    debounce = 3
    clear = 3
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ZoneConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip().lower()
        if key in ("debounce", "clear"):
            try:
                count = int(value)
            except ValueError:
                raise ZoneConfigError(
                    f"line {lineno}: {key} must be an integer, got {value!r}"
                ) from None
            if count < 1:
                raise ZoneConfigError(f"line {lineno}: {key} must be positive")
            if key == "debounce":
                debounce = count
            else:
                clear = count
        elif key in ("q0", "q1", "q2", "q3"):
            try:
                classes[QuadrantId[key.upper()]] = ZoneClass(value)
            except ValueError:
                raise ZoneConfigError(
                    f"line {lineno}: unknown zone class {value!r}"
                ) from None
        else:
            raise ZoneConfigError(f"line {lineno}: unknown key {key!r}")
    return ZoneConfig(zone_class=classes, debounce_frames=debounce, clear_frames=clear)
