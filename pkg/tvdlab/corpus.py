"""
Corpus - Diversity, frequency histograms and saturation curves for token corpora

Diversity is the number of distinct corpus tokens that also appear in a
reference vocabulary. Two companion dataset axes are documented here but not
computed, since they need data this package does not have:

    quantity = total tokens / acquisition cost
    quality  = rated-correct annotations / rated annotations
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import NegativeEntry, SizeExceedsCorpus
from .models import DiversityReport

logger = logging.getLogger(__name__)

DEFAULT_CURVE_POINTS = 10


@dataclass
class WhitespaceTokenizer:
    """Maps whitespace-separated strings to ids in first-seen order."""

    vocab: Dict[str, int] = field(default_factory=dict)
    tag: str = "whitespace"

    def id_of(self, token: str) -> int:
        if token not in self.vocab:
            self.vocab[token] = len(self.vocab)
        return self.vocab[token]

    def encode(self, text: str) -> List[int]:
        return [self.id_of(tok) for tok in text.split()]


@dataclass
class Corpus:
    documents: List[np.ndarray]
    tokenizer_tag: str = "ids"

    def __post_init__(self):
        self.documents = [np.asarray(doc, dtype=np.int64).reshape(-1) for doc in self.documents]
        for doc in self.documents:
            if doc.size and doc.min() < 0:
                raise NegativeEntry("token ids must be >= 0")

    def __len__(self):
        return len(self.documents)

    def tokens(self, order: Optional[Sequence[int]] = None) -> np.ndarray:
        docs = self.documents if order is None else [self.documents[i] for i in order]
        if not docs:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(docs)

    @property
    def total_tokens(self) -> int:
        return int(sum(doc.size for doc in self.documents))


def load_corpus(path, tokenizer: Optional[WhitespaceTokenizer] = None) -> Tuple[Corpus, Optional[WhitespaceTokenizer]]:
    """
    Read a corpus file.

    `.jsonl` files hold one {"tokens": [ids]} object per line; anything else is
    UTF-8 text with one document per line, tokenized on whitespace.

    Returns:
        Tuple (corpus, tokenizer); tokenizer is None for id corpora
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        docs = [json.loads(line)["tokens"] for line in text.splitlines() if line.strip()]
        return Corpus(docs, "ids"), None
    tokenizer = tokenizer or WhitespaceTokenizer()
    docs = [tokenizer.encode(line) for line in text.splitlines() if line.strip()]
    return Corpus(docs, tokenizer.tag), tokenizer


def load_reference(path, tokenizer: Optional[WhitespaceTokenizer] = None) -> Set[int]:
    """One entry per line: token ids, or token strings when a tokenizer is given."""
    lines = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    if tokenizer is None:
        return {int(line) for line in lines if line}
    return {tokenizer.id_of(line) for line in lines if line}


def diversity(corpus: Corpus, reference_vocab: Iterable[int]) -> int:
    """Distinct corpus tokens that are members of the reference vocabulary."""
    seen = set(np.unique(corpus.tokens()).tolist())
    return len(seen & set(reference_vocab))


def token_histogram(corpus: Corpus) -> Dict[int, int]:
    counts = Counter(corpus.tokens().tolist())
    return dict(sorted(counts.items()))


def log_spaced_sizes(num_documents: int, points: int = DEFAULT_CURVE_POINTS) -> List[int]:
    """`points` non-decreasing sizes from 1 to num_documents, evenly spaced in log."""
    if num_documents <= 0:
        return [0] * points
    return np.round(np.geomspace(1, num_documents, points)).astype(int).tolist()


def saturation_curve(corpus: Corpus, sample_sizes: Sequence[int], reference_vocab: Iterable[int],
                     seed: int = 0) -> List[Tuple[int, int]]:
    """
    Unique in-reference tokens over growing prefixes of one seeded shuffle.

    Every size reuses the same document order, so the counts never decrease.
    """
    sizes = [int(s) for s in sample_sizes]
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sample sizes must be ascending")
    if sizes and (sizes[0] < 0 or sizes[-1] > len(corpus)):
        raise SizeExceedsCorpus(f"sample size {sizes[-1]} exceeds {len(corpus)} documents")

    order = np.random.default_rng(seed).permutation(len(corpus))
    tokens = corpus.tokens(order)
    boundaries = np.concatenate([[0], np.cumsum([corpus.documents[i].size for i in order])]).astype(np.int64)

    reference = np.fromiter(set(reference_vocab), dtype=np.int64)
    positions = np.flatnonzero(np.isin(tokens, reference))
    _, first = np.unique(tokens[positions], return_index=True)
    first_positions = np.sort(positions[first])

    counts = np.searchsorted(first_positions, boundaries[sizes], side="left")
    return list(zip(sizes, counts.tolist()))


def slope_concavity(sizes: Sequence[int], counts: Sequence[int]) -> float:
    """Fraction of consecutive triples whose slope does not increase."""
    sizes = np.asarray(sizes, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if sizes.size < 3:
        return 1.0
    widths = np.diff(sizes)
    rises = np.diff(counts)
    slopes = np.divide(rises, widths, out=np.zeros_like(rises), where=widths > 0)
    ok = (slopes[1:] <= slopes[:-1] + 1e-12) | (widths[1:] == 0) | (widths[:-1] == 0)
    return float(ok.mean())


def zipf_corpus(vocab: int = 10_000, tokens: int = 1_000_000, exponent: float = 1.2,
                doc_len: int = 10, seed: int = 0) -> Corpus:
    """Documents of doc_len tokens drawn i.i.d. from a Zipf law truncated to vocab."""
    weights = np.arange(1, vocab + 1, dtype=np.float64) ** -exponent
    rng = np.random.default_rng(seed)
    draws = rng.choice(vocab, size=tokens, p=weights / weights.sum())
    return Corpus(np.array_split(draws, max(1, tokens // doc_len)), "zipf")


def diversity_report(corpus: Corpus, reference_vocab: Iterable[int], sample_sizes: Optional[Sequence[int]] = None,
                     seed: int = 0) -> DiversityReport:
    reference = set(reference_vocab)
    sizes = list(sample_sizes) if sample_sizes is not None else log_spaced_sizes(len(corpus))
    curve = saturation_curve(corpus, sizes, reference, seed)
    histogram = token_histogram(corpus)
    report = DiversityReport(
        tokenizer_tag=corpus.tokenizer_tag,
        total_tokens=corpus.total_tokens,
        unique_total=len(histogram),
        unique_in_reference=diversity(corpus, reference),
        histogram=histogram,
        sample_sizes=[s for s, _ in curve],
        counts=[c for _, c in curve],
    )
    logger.info("diversity: %d of %d unique tokens in reference", report.unique_in_reference, report.unique_total)
    return report
