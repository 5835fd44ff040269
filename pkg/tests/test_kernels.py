import unicodedata
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weibosent import _purepy, kernels

from conftest import _speedups

texts = st.text(alphabet=st.characters(codec="utf-8"), max_size=60)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("武 汉\t加油\n", "武汉加油"),
        ("武汉加油", "武汉加油"),
        ("A　B", "AB"),
        ("a\r\nb c d e", "abcde"),
        ("café", "café"),
        ("", ""),
        (" \t　\n", ""),
    ],
)
def test_normalize_examples(backend, raw, expected):
    assert backend.normalize_content(raw) == expected


@given(texts)
def test_normalize_idempotent(backend, text):
    once = backend.normalize_content(text)
    assert backend.normalize_content(once) == once


@given(texts)
def test_normalize_has_no_whitespace(backend, text):
    assert not any(ch.isspace() for ch in backend.normalize_content(text))


@given(texts)
def test_normalize_matches_definition(backend, text):
    composed = unicodedata.normalize("NFC", text)
    assert backend.normalize_content(text) == "".join(ch for ch in composed if not ch.isspace())


@given(st.lists(texts, max_size=8), st.booleans())
def test_char_counts_match_counter(backend, items, strip):
    expected = Counter()
    for t in items:
        expected.update(ch for ch in t if not (strip and ch.isspace()))
    assert backend.char_counts(items, strip) == dict(expected)


def test_char_counts_astral(backend):
    assert backend.char_counts(["😀a😀", "\U00020000"]) == {"😀": 2, "a": 1, "\U00020000": 1}


@pytest.mark.skipif(_speedups is None, reason="compiled kernels not built")
@settings(max_examples=200)
@given(st.lists(st.text(alphabet=" \tab　c", max_size=5), max_size=40), st.data())
def test_backends_agree_on_grouping(contents, data):
    skip = data.draw(st.lists(st.booleans(), min_size=len(contents), max_size=len(contents)))
    assert _speedups.group_duplicates(contents, skip) == _purepy.group_duplicates(contents, skip)


def test_grouping_codes(backend):
    out = backend.group_duplicates(["A", "A ", "B//", "A", "C"], [False, False, True, False, False])
    assert out == [kernels.FIRST, 0, kernels.SKIPPED, 0, kernels.FIRST]


def test_grouping_survives_digest_collisions(backend):
    # Every text hashes to the same bucket; equality confirmation must keep groups apart.
    contents = ["x", "y", "x ", "z", "y\t", "z"]
    out = backend.group_duplicates(contents, [False] * 6, lambda b: b"\x00")
    assert out == [-1, -1, 0, -1, 1, 3]


def test_backend_flag_reports_active_impl():
    import os

    assert kernels.BACKEND in ("cython", "python")
    if os.environ.get("WEIBOSENT_PURE_PYTHON"):
        assert kernels.BACKEND == "python"
    elif _speedups is not None:
        assert kernels.BACKEND == "cython"


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    assert bench.main(["--n", "2000", "--repeat", "1"]) == 0
    assert "group_duplicates" in capsys.readouterr().out
