from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvdlab.corpus import (
    Corpus,
    WhitespaceTokenizer,
    diversity,
    diversity_report,
    load_corpus,
    load_reference,
    log_spaced_sizes,
    saturation_curve,
    slope_concavity,
    token_histogram,
    zipf_corpus,
)
from tvdlab.errors import NegativeEntry, SizeExceedsCorpus

DATA = Path(__file__).parent / "data"

documents = st.lists(st.lists(st.integers(0, 50), max_size=12), min_size=1, max_size=20)


def test_whitespace_tokenizer_ids_in_first_seen_order():
    tok = WhitespaceTokenizer()
    assert tok.encode("b a b c") == [0, 1, 0, 2]
    assert tok.id_of("a") == 1


def test_text_fixture_counts():
    corpus, tokenizer = load_corpus(DATA / "toy_corpus.txt")
    reference = load_reference(DATA / "toy_reference.txt", tokenizer)
    assert corpus.tokenizer_tag == "whitespace"
    assert len(corpus) == 4
    assert corpus.total_tokens == 20
    assert diversity(corpus, reference) == 7
    histogram = token_histogram(corpus)
    assert len(histogram) == 11
    assert histogram[tokenizer.vocab["the"]] == 4
    assert histogram[tokenizer.vocab["a"]] == 3
    assert sum(histogram.values()) == 20


def test_jsonl_fixture_matches_text_fixture():
    corpus, tokenizer = load_corpus(DATA / "toy_corpus.jsonl")
    assert tokenizer is None
    reference = load_reference(DATA / "toy_reference_ids.txt")
    report = diversity_report(corpus, reference)
    assert report.total_tokens == 20
    assert report.unique_total == 11
    assert report.unique_in_reference == 7
    assert report.histogram == {0: 4, 1: 2, 2: 2, 3: 2, 4: 1, 5: 3, 6: 2, 7: 1, 8: 1, 9: 1, 10: 1}
    assert report.sample_sizes == [1, 1, 1, 2, 2, 2, 3, 3, 3, 4]
    assert report.counts[-1] == 7


def test_log_spaced_sizes():
    sizes = log_spaced_sizes(1000)
    assert len(sizes) == 10
    assert sizes[0] == 1 and sizes[-1] == 1000
    assert sizes == sorted(sizes)


def test_saturation_curve_errors():
    corpus = Corpus([[0, 1], [2], [1, 3]])
    with pytest.raises(ValueError):
        saturation_curve(corpus, [2, 1], {0, 1})
    with pytest.raises(SizeExceedsCorpus):
        saturation_curve(corpus, [1, 4], {0, 1})
    with pytest.raises(NegativeEntry):
        Corpus([[0, -1]])
    assert saturation_curve(corpus, [0, 3], set()) == [(0, 0), (3, 0)]


@given(documents)
def test_histogram_sums_to_corpus_length(docs):
    corpus = Corpus(docs)
    assert sum(token_histogram(corpus).values()) == corpus.total_tokens == sum(len(d) for d in docs)


@given(documents, st.sets(st.integers(0, 60)), st.integers(0, 2**16))
def test_saturation_curve_is_monotone(docs, reference, seed):
    corpus = Corpus(docs)
    sizes = sorted({0, len(corpus) // 2, len(corpus)})
    curve = saturation_curve(corpus, sizes, reference, seed=seed)
    counts = [c for _, c in curve]
    assert counts == sorted(counts)
    assert counts[-1] == diversity(corpus, reference)


def test_zipf_curve_saturates():
    corpus = zipf_corpus(vocab=10_000, tokens=1_000_000, exponent=1.2, seed=0)
    sizes = [1000, 4000, 16000, 64000, 100000]
    curve = saturation_curve(corpus, sizes, range(10_000), seed=0)
    counts = [c for _, c in curve]
    assert counts == sorted(counts)
    assert slope_concavity(sizes, counts) >= 0.9
    # far from every vocabulary item appearing in the first thousand documents
    assert counts[0] < 0.5 * 10_000


def test_slope_concavity():
    assert slope_concavity([1, 2, 3, 4], [1, 3, 4, 4]) == 1.0
    assert slope_concavity([1, 2, 3], [1, 1, 5]) == 0.0
    assert slope_concavity([1, 2], [1, 2]) == 1.0
    assert np.isclose(slope_concavity([1, 2, 3, 4], [1, 2, 4, 5]), 0.5)
