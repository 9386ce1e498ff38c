"""Word-count weighted aggregation into per-speaker and per-group summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

__all__ = [
    "WeightedScore",
    "InstanceScore",
    "SpeakerScore",
    "GroupMetrics",
    "BiasDelta",
    "weighted_mean",
    "per_speaker_scores",
    "group_summary",
    "bias_delta",
]

Metric = Literal["wer", "cer", "bss"]


@dataclass(frozen=True)
class WeightedScore:
    value: float
    weight: float


@dataclass(frozen=True)
class InstanceScore:
    """Per-instance scores for one (instance, model) pair.

    ``weight`` is the number of word tokens in the normalized reference.
    ``word_errors``/``char_errors`` and the matching reference lengths are the
    raw counts behind ``wer``/``cer``, kept so group results can be checked
    against pooled counts.
    """

    instance_id: str
    speaker_id: str
    group: str
    weight: int
    word_errors: int
    char_errors: int | None = None
    char_length: int | None = None
    bss: float | None = None

    @property
    def wer(self) -> float:
        return self.word_errors / self.weight

    @property
    def cer(self) -> float | None:
        if self.char_errors is None or not self.char_length:
            return None
        return self.char_errors / self.char_length

    def metric(self, name: Metric) -> float | None:
        if name == "wer":
            return self.wer
        if name == "cer":
            return self.cer
        if name == "bss":
            return self.bss
        raise ValueError(f"unknown metric {name!r}")


@dataclass(frozen=True)
class SpeakerScore:
    speaker_id: str
    metric: Metric
    value: float
    total_weight: float
    instance_count: int
    group: str | None = None


@dataclass(frozen=True)
class GroupMetrics:
    group: str
    model_id: str
    weighted_wer: float | None
    weighted_cer: float | None
    weighted_bss: float | None
    instance_count: int
    speaker_count: int
    word_count: int = 0
    bss_count: int = 0


@dataclass(frozen=True)
class BiasDelta:
    absolute: float
    relative: float | None
    low_group: str | None = None
    high_group: str | None = None


def weighted_mean(scores: Iterable[WeightedScore]) -> float:
    """sum(w*v) / sum(w), accumulated with compensated summation."""
    scores = list(scores)
    if not scores:
        raise ValueError("weighted mean of an empty list")
    if any(s.weight < 0 or not math.isfinite(s.weight) for s in scores):
        raise ValueError("weights must be finite and nonnegative")
    total = math.fsum(s.weight for s in scores)
    if total <= 0:
        raise ValueError("weighted mean with zero total weight")
    mean = math.fsum(s.weight * s.value for s in scores) / total
    # guard the min <= mean <= max property against last-bit rounding
    lo = min(s.value for s in scores if s.weight > 0)
    hi = max(s.value for s in scores if s.weight > 0)
    return min(max(mean, lo), hi)


def per_speaker_scores(scores: Sequence[InstanceScore], metric: Metric = "wer") -> list[SpeakerScore]:
    """One within-speaker weighted mean per (group, speaker), in first-seen order.

    Instances lacking the metric (BSS without embeddings) are skipped; a
    speaker with no usable instance produces no score.
    """
    buckets: dict[tuple[str, str], list[InstanceScore]] = {}
    for s in scores:
        buckets.setdefault((s.group, s.speaker_id), []).append(s)
    out: list[SpeakerScore] = []
    for (group, speaker), items in buckets.items():
        ws = [WeightedScore(v, it.weight) for it in items if (v := it.metric(metric)) is not None]
        if not ws:
            continue
        out.append(
            SpeakerScore(
                speaker_id=speaker,
                metric=metric,
                value=weighted_mean(ws),
                total_weight=math.fsum(w.weight for w in ws),
                instance_count=len(ws),
                group=group,
            )
        )
    return out


def _pooled(items: Sequence[InstanceScore], metric: Metric) -> float | None:
    if metric == "wer":
        n = sum(s.weight for s in items)
        return sum(s.word_errors for s in items) / n if n else None
    ws = [WeightedScore(v, s.weight) for s in items if (v := s.metric(metric)) is not None]
    return weighted_mean(ws) if ws else None


def summarize(items: Sequence[InstanceScore], group: str, model_id: str) -> GroupMetrics:
    return GroupMetrics(
        group=group,
        model_id=model_id,
        weighted_wer=_pooled(items, "wer"),
        weighted_cer=_pooled(items, "cer"),
        weighted_bss=_pooled(items, "bss"),
        instance_count=len(items),
        speaker_count=len({s.speaker_id for s in items}),
        word_count=sum(s.weight for s in items),
        bss_count=sum(1 for s in items if s.bss is not None),
    )


def group_summary(scores: Sequence[InstanceScore], model_id: str) -> list[GroupMetrics]:
    """Weighted WER/CER/BSS per group, groups in sorted order.

    Group WER is computed as pooled word errors over pooled reference words,
    which equals the word-count weighted mean of instance WERs.
    """
    groups: dict[str, list[InstanceScore]] = {}
    for s in scores:
        groups.setdefault(s.group, []).append(s)
    return [summarize(groups[g], g, model_id) for g in sorted(groups)]


def bias_delta(a: GroupMetrics | float, b: GroupMetrics | float) -> BiasDelta:
    """Absolute and relative WER gap between two groups.

    The relative gap divides by the smaller WER; it is None when that is 0
    and the gap is not.
    """
    wa = a.weighted_wer if isinstance(a, GroupMetrics) else float(a)
    wb = b.weighted_wer if isinstance(b, GroupMetrics) else float(b)
    if wa is None or wb is None:
        raise ValueError("both groups need a WER")
    absolute = abs(wa - wb)
    low = min(wa, wb)
    if absolute == 0:
        relative: float | None = 0.0
    elif low > 0:
        relative = absolute / low
    else:
        relative = None
    names = (
        (a.group, b.group) if isinstance(a, GroupMetrics) and isinstance(b, GroupMetrics) else (None, None)
    )
    low_group, high_group = names if wa <= wb else names[::-1]
    return BiasDelta(absolute, relative, low_group, high_group)
