"""Split long speaker turns into the fewest equal parts no longer than a cap."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["SpeakerTurn", "SegmentPlan", "plan_parts", "split_turn", "DEFAULT_CAP_S"]

DEFAULT_CAP_S = 30.0


@dataclass(frozen=True)
class SpeakerTurn:
    speaker_id: str
    start_s: float
    end_s: float
    text: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError("turn timestamps must be finite")
        if self.start_s < 0:
            raise ValueError(f"start_s must be nonnegative, got {self.start_s}")
        if not self.end_s > self.start_s:
            raise ValueError(f"end_s ({self.end_s}) must exceed start_s ({self.start_s})")


@dataclass(frozen=True)
class SegmentPlan:
    speaker_id: str
    parts: tuple[tuple[float, float], ...]


def part_count(duration_s: float, cap_s: float = DEFAULT_CAP_S) -> int:
    if not (duration_s > 0 and math.isfinite(duration_s)):
        raise ValueError(f"duration must be positive, got {duration_s!r}")
    if not (cap_s > 0 and math.isfinite(cap_s)):
        raise ValueError(f"cap must be positive, got {cap_s!r}")
    n = max(1, math.ceil(duration_s / cap_s))
    # guard against the quotient rounding across an integer
    while n > 1 and duration_s / (n - 1) <= cap_s:
        n -= 1
    while duration_s / n > cap_s:
        n += 1
    return n


def plan_parts(duration_s: float, cap_s: float = DEFAULT_CAP_S) -> list[float]:
    """Durations of the largest equal parts no longer than ``cap_s``.

    >>> plan_parts(42)
    [21.0, 21.0]
    """
    n = part_count(duration_s, cap_s)
    return [duration_s / n] * n


def split_turn(turn: SpeakerTurn, cap_s: float = DEFAULT_CAP_S) -> SegmentPlan:
    """Plan the parts of one turn as absolute (start, end) pairs in seconds.

    Boundaries are quantized to milliseconds by flooring their cumulative
    offset, so every part is within 1 ms of the others and the last part
    absorbs the remainder. The first start and last end are the turn's own
    timestamps rounded to the millisecond.
    """
    n = part_count(turn.end_s - turn.start_s, cap_s)
    start_ms = round(turn.start_s * 1000)
    end_ms = round(turn.end_s * 1000)
    total_ms = end_ms - start_ms
    if total_ms <= 0 or n == 1:
        return SegmentPlan(turn.speaker_id, ((start_ms / 1000, end_ms / 1000),))
    bounds = [start_ms + (k * total_ms) // n for k in range(n)] + [end_ms]
    parts = tuple((bounds[k] / 1000, bounds[k + 1] / 1000) for k in range(n))
    return SegmentPlan(turn.speaker_id, parts)
