"""Sentiment label vocabulary shared by every pipeline stage."""

from __future__ import annotations

from enum import Enum


class SentimentLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    SARCASTIC = "sarcastic"

    def __str__(self) -> str:
        return self.value

    @property
    def title(self) -> str:
        return self.value.capitalize()


class _Unparsed(str, Enum):
    UNPARSED = "unparsed"

    def __str__(self) -> str:
        return self.value


#: Result sentinel for a model reply that is not exactly one label word.
UNPARSED = _Unparsed.UNPARSED

#: Row/column order of confusion matrices and CSV columns.
LABEL_ORDER: tuple[SentimentLabel, ...] = (
    SentimentLabel.SARCASTIC,
    SentimentLabel.NEUTRAL,
    SentimentLabel.NEGATIVE,
    SentimentLabel.POSITIVE,
)


def label_from_str(value: str) -> SentimentLabel | _Unparsed:
    """Decode a serialized label (case-insensitive). Raises ValueError on unknown text."""
    key = value.strip().lower()
    if key == UNPARSED.value:
        return UNPARSED
    return SentimentLabel(key)
