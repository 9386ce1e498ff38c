"""WER Parity: is the WER ratio between two groups within 1 + epsilon?"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ParityVerdict", "wer_parity", "UNFAIR_MARKER", "DEFAULT_EPSILON"]

UNFAIR_MARKER = "≠"
DEFAULT_EPSILON = 0.25


@dataclass(frozen=True)
class ParityVerdict:
    group_high: str
    group_low: str
    ratio: float
    epsilon: float
    fair: bool
    marker: str
    wer_high: float | None = None
    wer_low: float | None = None
    note: str | None = None


def wer_parity(
    wer_a: float,
    wer_b: float,
    epsilon: float = DEFAULT_EPSILON,
    group_a: str = "a",
    group_b: str = "b",
) -> ParityVerdict:
    """Compare max/min of two group WERs against ``1 + epsilon``.

    A ratio exactly on the bound counts as fair.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon!r}")
    if not (wer_a > 0 and wer_b > 0) or math.isinf(wer_a) or math.isinf(wer_b):
        raise ValueError(f"WER Parity needs two positive finite WERs, got {wer_a!r} and {wer_b!r}")
    if wer_a >= wer_b:
        high, low, g_high, g_low = wer_a, wer_b, group_a, group_b
    else:
        high, low, g_high, g_low = wer_b, wer_a, group_b, group_a
    ratio = high / low
    fair = ratio <= 1.0 + epsilon
    return ParityVerdict(g_high, g_low, ratio, epsilon, fair, "" if fair else UNFAIR_MARKER, high, low)


def degenerate_parity(
    wer_a: float, wer_b: float, epsilon: float, group_a: str, group_b: str
) -> ParityVerdict:
    """Verdict when at least one WER is zero.

    Two zero WERs are treated as equal (ratio 1, fair); a single zero WER
    makes the ratio infinite and the verdict unfair.
    """
    if wer_a > 0 and wer_b > 0:
        return wer_parity(wer_a, wer_b, epsilon, group_a, group_b)
    if wer_a == wer_b:
        return ParityVerdict(group_a, group_b, 1.0, epsilon, True, "", wer_a, wer_b, note="both WERs are zero")
    g_high, g_low = (group_a, group_b) if wer_a > wer_b else (group_b, group_a)
    return ParityVerdict(
        g_high, g_low, math.inf, epsilon, False, UNFAIR_MARKER, max(wer_a, wer_b), 0.0, note="one WER is zero"
    )
