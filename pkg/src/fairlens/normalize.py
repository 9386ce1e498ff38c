"""Text standardization applied to references and hypotheses before scoring.

The steps follow the spirit of the Whisper "basic" normalizer but are pinned
down exactly so results are reproducible:

1. NFC compose and lowercase.
2. Optionally drop ``[...]`` and ``(...)`` spans (non-nested).
3. Replace anything that is not a letter, digit, combining mark attached to
   a word character, or an apostrophe between letters with a space.
4. Optionally strip diacritics (NFKD, drop combining marks) and refilter.
5. Collapse whitespace and trim.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

__all__ = ["NormalizerConfig", "normalize_text", "TextNormalizer"]

_BRACKETED = re.compile(r"\[[^\[\]]*\]|\([^()]*\)")
_APOSTROPHES = {"'", "’"}


@dataclass(frozen=True)
class NormalizerConfig:
    remove_diacritics: bool = False
    bracket_removal: bool = True


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch)[0] == "L"


def _is_alnum(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] == "L" or cat == "Nd"


def _is_mark(ch: str) -> bool:
    return unicodedata.category(ch)[0] == "M"


def _filter_chars(text: str) -> str:
    out: list[str] = []
    n = len(text)
    for i, ch in enumerate(text):
        prev = out[-1] if out else " "
        if _is_alnum(ch):
            out.append(ch)
        elif _is_mark(ch) and prev != " " and prev != "'":
            out.append(ch)
        elif (
            ch in _APOSTROPHES
            and (_is_letter(prev) or (_is_mark(prev) and len(out) > 1))
            and i + 1 < n
            and _is_letter(text[i + 1])
        ):
            out.append("'")
        else:
            out.append(" ")
    return "".join(out)


def _strip_diacritics(text: str) -> str:
    lowered = unicodedata.normalize("NFKD", text).lower()
    decomposed = unicodedata.normalize("NFKD", lowered)
    return "".join(ch for ch in decomposed if not _is_mark(ch))


def normalize_text(raw: str, config: NormalizerConfig | None = None) -> str:
    """Normalize ``raw`` into lowercase words separated by single spaces.

    >>> normalize_text("Hallo, Wereld!")
    'hallo wereld'
    >>> normalize_text("Hij pakt z'n [lacht] fiets")
    "hij pakt z'n fiets"
    """
    config = config or NormalizerConfig()
    text = unicodedata.normalize("NFC", unicodedata.normalize("NFC", raw).lower())
    if config.bracket_removal:
        text = _BRACKETED.sub(" ", text)
    text = _filter_chars(text)
    if config.remove_diacritics:
        text = _filter_chars(_strip_diacritics(text))
    return " ".join(text.split())


class TextNormalizer:
    """Callable wrapper so a configured normalizer can be passed around."""

    def __init__(self, remove_diacritics: bool = False, bracket_removal: bool = True):
        self.config = NormalizerConfig(remove_diacritics, bracket_removal)

    def __call__(self, raw: str) -> str:
        return normalize_text(raw, self.config)

    def __repr__(self) -> str:
        c = self.config
        return f"TextNormalizer(remove_diacritics={c.remove_diacritics}, bracket_removal={c.bracket_removal})"
