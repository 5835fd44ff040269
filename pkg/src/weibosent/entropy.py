"""Character-level entropy per sentiment class and the derived ranking table."""

from __future__ import annotations

import csv
import math
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from . import kernels
from .labels import SentimentLabel

DEFAULT_SAMPLE_SIZE = 15_000

LOW_PAIR = (SentimentLabel.NEUTRAL, SentimentLabel.POSITIVE)
HIGH_PAIR = (SentimentLabel.SARCASTIC, SentimentLabel.NEGATIVE)

RANK_NAMES = ("Lowest", "Low", "High", "Highest")


class EmptyClass(ValueError):
    pass


class EmptySample(ValueError):
    pass


class MissingLabel(ValueError):
    pass


@dataclass(frozen=True)
class EntropySample:
    label: SentimentLabel
    posts: tuple[str, ...]
    requested_n: int
    seed: int

    @property
    def actual_n(self) -> int:
        return len(self.posts)


def sample_posts(
    label: SentimentLabel,
    posts: Sequence[str],
    n: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 42,
) -> EntropySample:
    """Uniform sample of ``n`` posts without replacement (all of them if fewer)."""
    if not posts:
        raise EmptyClass(f"no posts labelled {label.value}")
    if n <= 0:
        raise ValueError("sample size must be positive")
    rng = random.Random(seed)
    if n >= len(posts):
        chosen = tuple(posts)
    else:
        chosen = tuple(posts[i] for i in sorted(rng.sample(range(len(posts)), n)))
    return EntropySample(label, chosen, n, seed)


def entropy_from_counts(counts: Mapping[str, int]) -> float:
    total = sum(counts.values())
    if total == 0:
        raise EmptySample("no characters to measure")
    h = 0.0
    for c in counts.values():
        if c:
            p = c / total
            h -= p * math.log2(p)
    # -0.0 for single-symbol text
    return h + 0.0


def char_entropy(sample: EntropySample | Sequence[str] | str, strip_whitespace: bool = False) -> float:
    """Shannon entropy (bits/char) of the code-point distribution of the concatenated posts."""
    if isinstance(sample, EntropySample):
        texts: Sequence[str] = sample.posts
    elif isinstance(sample, str):
        texts = (sample,)
    else:
        texts = sample
    return entropy_from_counts(kernels.char_counts(texts, strip_whitespace))


@dataclass(frozen=True)
class EntropyRow:
    label: SentimentLabel
    entropy: float
    rank: int
    rank_name: str
    distance: float | None


@dataclass(frozen=True)
class EntropyReport:
    rows: tuple[EntropyRow, ...]  # ascending entropy
    low_pair_entropy: float
    high_pair_entropy: float
    pair_distance: float
    sample_sizes: Mapping[SentimentLabel, int] | None = None

    def row(self, label: SentimentLabel) -> EntropyRow:
        return next(r for r in self.rows if r.label is label)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            cols = ["type", "entropy", "rank", "distance", "pair_entropy", "pair_distance"]
            if self.sample_sizes:
                cols.append("sample_n")
            writer.writerow(cols)
            for r in self.rows:
                pair = self.low_pair_entropy if r.label in LOW_PAIR else self.high_pair_entropy
                line = [
                    r.label.value,
                    _fmt(r.entropy),
                    r.rank_name,
                    "" if r.distance is None else _fmt(r.distance),
                    _fmt(pair),
                    _fmt(self.pair_distance),
                ]
                if self.sample_sizes:
                    line.append(self.sample_sizes.get(r.label, ""))
                writer.writerow(line)


def _fmt(x: float) -> str:
    return format(round(x, 10), ".10g")


def entropy_table(
    entropies: Mapping[SentimentLabel, float],
    sample_sizes: Mapping[SentimentLabel, int] | None = None,
) -> EntropyReport:
    """Rank classes by ascending entropy and derive gaps and pair means.

    Each row's distance is the gap up to the next-ranked class (none for the
    top). The neutral/positive and sarcastic/negative pairs are summarised by
    their arithmetic mean; the pair distance is high mean minus low mean.
    """
    for label in SentimentLabel:
        if label not in entropies:
            raise MissingLabel(label.value)
    fixed = list(SentimentLabel)
    ordered = sorted(fixed, key=lambda l: (entropies[l], fixed.index(l)))
    rows = []
    for i, label in enumerate(ordered):
        nxt = entropies[ordered[i + 1]] - entropies[label] if i + 1 < len(ordered) else None
        rows.append(EntropyRow(label, float(entropies[label]), i + 1, RANK_NAMES[i], nxt))
    low = (entropies[LOW_PAIR[0]] + entropies[LOW_PAIR[1]]) / 2
    high = (entropies[HIGH_PAIR[0]] + entropies[HIGH_PAIR[1]]) / 2
    return EntropyReport(tuple(rows), low, high, high - low, sample_sizes)
