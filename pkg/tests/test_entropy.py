import math
import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weibosent.entropy import (
    EmptyClass,
    EmptySample,
    HIGH_PAIR,
    LOW_PAIR,
    MissingLabel,
    char_entropy,
    entropy_from_counts,
    entropy_table,
    sample_posts,
)
from weibosent.labels import SentimentLabel

S, NEU, NEG, POS = (SentimentLabel.SARCASTIC, SentimentLabel.NEUTRAL,
                    SentimentLabel.NEGATIVE, SentimentLabel.POSITIVE)

PUBLISHED = {NEU: 9.2740, POS: 9.3299, S: 9.4084, NEG: 9.4567}


def tally_entropy(texts):
    """Independent oracle: count characters in a plain loop."""
    counts = {}
    n = 0
    for text in texts:
        for ch in text:
            counts[ch] = counts.get(ch, 0) + 1
            n += 1
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


def test_single_symbol_is_zero():
    assert char_entropy("aaaa") == 0.0
    assert math.copysign(1, char_entropy("aaaa")) == 1


def test_two_symbols():
    assert char_entropy("abab") == 1.0


@pytest.mark.parametrize("k", [2, 4, 16, 256])
def test_uniform_alphabet(k):
    text = "".join(chr(0x4E00 + i) for i in range(k)) * 3
    assert char_entropy(text) == pytest.approx(math.log2(k), abs=1e-12)


def test_concatenation_across_posts():
    assert char_entropy(["ab", "ab"]) == 1.0
    assert char_entropy(["a", "b"]) == 1.0


def test_whitespace_counted_unless_stripped():
    assert char_entropy("a a ") == 1.0
    assert char_entropy("a a ", strip_whitespace=True) == 0.0


def test_astral_characters_are_single_symbols():
    assert char_entropy("\U0001F600a") == 1.0


def test_empty_raises():
    with pytest.raises(EmptySample):
        char_entropy("")
    with pytest.raises(EmptySample):
        char_entropy(["", ""])
    with pytest.raises(EmptySample):
        entropy_from_counts({})


def test_random_corpora_match_oracle():
    rng = random.Random(7)
    alphabet = "abc 的是了我你他好坏\t　😀"
    for _ in range(100):
        texts = ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40)))
                 for _ in range(rng.randint(1, 8))]
        assert char_entropy(texts) == pytest.approx(tally_entropy(texts), abs=1e-12)


texts_st = st.lists(st.text(min_size=1, max_size=30), min_size=1, max_size=6)


@given(texts_st)
def test_bounds(texts):
    h = char_entropy(texts)
    unique = len(set("".join(texts)))
    assert -1e-12 <= h <= math.log2(unique) + 1e-12


@given(texts_st)
def test_relabeling_invariance(texts):
    alphabet = sorted(set("".join(texts)))
    shifted = dict(zip(alphabet, (chr(0x4E00 + i) for i in range(len(alphabet)))))
    relabeled = ["".join(shifted[c] for c in t) for t in texts]
    assert char_entropy(relabeled) == pytest.approx(char_entropy(texts), abs=1e-12)


@given(texts_st)
def test_duplication_invariance(texts):
    assert char_entropy(texts * 2) == pytest.approx(char_entropy(texts), abs=1e-12)


@given(texts_st, st.randoms())
def test_post_order_invariance(texts, rnd):
    shuffled = list(texts)
    rnd.shuffle(shuffled)
    assert char_entropy(shuffled) == pytest.approx(char_entropy(texts), abs=1e-12)


def test_backends_agree(backend):
    texts = ["今天 天气\t好", "abc😀", "　"]
    counts = Counter(backend.char_counts(texts, False))
    assert counts == Counter("".join(texts))


# -- sampling ---------------------------------------------------------------

def test_sampling_deterministic():
    posts = [f"p{i}" for i in range(20)]
    a = sample_posts(NEU, posts, 5, seed=99)
    b = sample_posts(NEU, posts, 5, seed=99)
    assert a.posts == b.posts and a.actual_n == 5 and len(set(a.posts)) == 5
    assert set(a.posts) <= set(posts)


def test_sampling_clamps():
    posts = [f"p{i}" for i in range(10)]
    s = sample_posts(NEU, posts, 15_000, seed=1)
    assert s.actual_n == 10 and s.requested_n == 15_000
    assert sorted(s.posts) == sorted(posts)


def test_sampling_errors():
    with pytest.raises(EmptyClass):
        sample_posts(NEU, [], 5)
    with pytest.raises(ValueError):
        sample_posts(NEU, ["x"], 0)


def test_sampling_uniform_frequency():
    posts = ["a", "b", "c"]
    hits = Counter(sample_posts(NEU, posts, 1, seed=seed).posts[0] for seed in range(10_000))
    for p in posts:
        assert abs(hits[p] / 10_000 - 1 / 3) <= 0.02


# -- report -----------------------------------------------------------------

def test_published_table():
    report = entropy_table(PUBLISHED)
    assert [r.label for r in report.rows] == [NEU, POS, S, NEG]
    assert [r.rank_name for r in report.rows] == ["Lowest", "Low", "High", "Highest"]
    assert report.low_pair_entropy == pytest.approx(9.30195, abs=1e-5)
    assert report.high_pair_entropy == pytest.approx(9.43255, abs=1e-5)
    assert report.pair_distance == pytest.approx(0.1306, abs=1e-5)
    distances = [r.distance for r in report.rows]
    assert distances[:3] == pytest.approx([0.0559, 0.0785, 0.0483], abs=1e-5)
    assert distances[3] is None


def test_equal_entropies():
    report = entropy_table({l: 5.0 for l in SentimentLabel})
    assert [r.distance for r in report.rows[:3]] == [0.0, 0.0, 0.0]
    assert report.pair_distance == 0.0


def test_input_order_irrelevant():
    items = list(PUBLISHED.items())
    assert entropy_table(dict(items)) == entropy_table(dict(reversed(items)))


def test_missing_label():
    with pytest.raises(MissingLabel):
        entropy_table({NEU: 1.0, POS: 2.0, S: 3.0})


@given(st.lists(st.floats(0, 20, allow_nan=False), min_size=4, max_size=4))
def test_report_arithmetic(values):
    ent = dict(zip(SentimentLabel, values))
    report = entropy_table(ent)
    assert report.low_pair_entropy == (ent[LOW_PAIR[0]] + ent[LOW_PAIR[1]]) / 2
    assert report.high_pair_entropy == (ent[HIGH_PAIR[0]] + ent[HIGH_PAIR[1]]) / 2
    assert report.pair_distance == report.high_pair_entropy - report.low_pair_entropy
    for a, b in zip(report.rows, report.rows[1:]):
        assert a.distance == b.entropy - a.entropy >= 0


def test_csv(tmp_path):
    path = tmp_path / "entropy.csv"
    entropy_table(PUBLISHED, {l: 15_000 for l in SentimentLabel}).write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "type,entropy,rank,distance,pair_entropy,pair_distance,sample_n"
    assert lines[1] == "neutral,9.274,Lowest,0.0559,9.30195,0.1306,15000"
    assert lines[4] == "negative,9.4567,Highest,,9.43255,0.1306,15000"
