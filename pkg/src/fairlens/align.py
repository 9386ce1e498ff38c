"""Levenshtein alignment between token sequences, and WER / CER on top of it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Literal, Sequence

from .errors import UndefinedMetricError

__all__ = [
    "AlignmentCounts",
    "tokenize_words",
    "tokenize_chars",
    "align",
    "edit_distance",
    "wer",
    "cer",
]

Granularity = Literal["word", "character"]


@dataclass(frozen=True)
class AlignmentCounts:
    substitutions: int
    deletions: int
    insertions: int
    hits: int
    reference_length: int
    granularity: Granularity = "word"

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def hypothesis_length(self) -> int:
        return self.substitutions + self.insertions + self.hits

    @property
    def error_rate(self) -> float:
        if self.reference_length == 0:
            raise UndefinedMetricError("error rate undefined for an empty reference")
        return self.errors / self.reference_length


def tokenize_words(text: str) -> list[str]:
    return text.split(" ") if text else []


def tokenize_chars(text: str) -> list[str]:
    return list(text)


def edit_distance(reference: Sequence[Hashable], hypothesis: Sequence[Hashable]) -> int:
    """Unit-cost Levenshtein distance in O(min(m, n)) memory."""
    if len(reference) < len(hypothesis):
        reference, hypothesis = hypothesis, reference
    prev = list(range(len(hypothesis) + 1))
    for i, r in enumerate(reference, 1):
        cur = [i]
        for j, h in enumerate(hypothesis, 1):
            cur.append(min(prev[j - 1] + (r != h), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


def align(
    reference: Sequence[Hashable],
    hypothesis: Sequence[Hashable],
    granularity: Granularity = "word",
) -> AlignmentCounts:
    """Minimal unit-cost alignment with a deterministic backtrace.

    Among all minimal-cost alignments the backtrace, walking from the end of
    both sequences, prefers a hit, then a substitution, then a deletion, then
    an insertion.
    """
    m, n = len(reference), len(hypothesis)
    if m == 0 or n == 0:
        return AlignmentCounts(0, m, n, 0, m, granularity)

    # full cost matrix; rows are reference prefixes
    cost = [list(range(n + 1))]
    for i in range(1, m + 1):
        row = [i] + [0] * n
        r = reference[i - 1]
        above = cost[i - 1]
        for j in range(1, n + 1):
            row[j] = min(
                above[j - 1] + (r != hypothesis[j - 1]),
                above[j] + 1,
                row[j - 1] + 1,
            )
        cost.append(row)

    subs = dels = ins = hits = 0
    i, j = m, n
    while i > 0 or j > 0:
        here = cost[i][j]
        if i > 0 and j > 0:
            same = reference[i - 1] == hypothesis[j - 1]
            if same and cost[i - 1][j - 1] == here:
                hits += 1
                i -= 1
                j -= 1
                continue
            if not same and cost[i - 1][j - 1] + 1 == here:
                subs += 1
                i -= 1
                j -= 1
                continue
        if i > 0 and cost[i - 1][j] + 1 == here:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentCounts(subs, dels, ins, hits, m, granularity)


def wer(reference_text: str, hypothesis_text: str) -> float:
    """Word error rate between two normalized strings.

    Raises UndefinedMetricError for an empty reference.
    """
    ref = tokenize_words(reference_text)
    if not ref:
        raise UndefinedMetricError("WER is undefined for an empty reference")
    return edit_distance(ref, tokenize_words(hypothesis_text)) / len(ref)


def cer(reference_text: str, hypothesis_text: str) -> float:
    ref = tokenize_chars(reference_text)
    if not ref:
        raise UndefinedMetricError("CER is undefined for an empty reference")
    return edit_distance(ref, tokenize_chars(hypothesis_text)) / len(ref)
