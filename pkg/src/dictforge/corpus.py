"""Corpus ingestion: sentence segmentation, tokenization, vocabulary counts.

Documents are streamed one at a time; nothing here ever needs the whole
corpus in memory.  Segmentation and tokenization are deterministic,
rule-based approximations with byte-offset bookkeeping so every token can
be traced back to its source document.
"""

from __future__ import annotations

import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

__all__ = [
    "Token",
    "Sentence",
    "VocabStats",
    "word_shape",
    "tokenize",
    "segment_sentences",
    "build_vocab",
    "read_corpus",
    "iter_sentences",
    "write_token_stream",
    "DEFAULT_ABBREVIATIONS",
]

# Shape classes for a token's capitalization pattern.
SHAPE_ALL_LOWER = "allLower"
SHAPE_INIT_CAP = "initCap"
SHAPE_ALL_CAPS = "allCaps"
SHAPE_MIXED = "mixed"
SHAPE_NON_ALPHA = "nonAlpha"


def word_shape(text: str) -> str:
    """Capitalization shape of ``text``; a pure function of the string."""
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return SHAPE_NON_ALPHA
    if all(c.islower() for c in letters):
        return SHAPE_ALL_LOWER
    if all(c.isupper() for c in letters):
        return SHAPE_ALL_CAPS
    if text[0].isupper() and all(c.islower() for c in letters[1:]):
        return SHAPE_INIT_CAP
    return SHAPE_MIXED


@dataclass(frozen=True)
class Token:
    """One surface token with offsets into its source document.

    ``document[char_start:char_end] == text`` always holds for tokens
    produced by :func:`segment_sentences`; for bare :func:`tokenize` the
    offsets index the string that was tokenized.
    """

    text: str
    lower: str
    char_start: int
    char_end: int
    shape_caps: str

    @classmethod
    def make(cls, text: str, start: int) -> "Token":
        return cls(text, text.lower(), start, start + len(text), word_shape(text))


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    tokens: tuple[Token, ...]

    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def lowers(self) -> list[str]:
        return [t.lower for t in self.tokens]


def _edge_is_punct(ch: str) -> bool:
    # Anything non-alphanumeric counts as detachable edge punctuation.
    return not ch.isalnum()


def _tokenize_span(document: str, start: int, end: int) -> Iterator[Token]:
    """Tokens of document[start:end] with document-absolute offsets."""
    i = start
    n = end
    while i < n:
        if document[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not document[j].isspace():
            j += 1
        # Detach leading punctuation one character at a time.
        a = i
        while a < j and _edge_is_punct(document[a]):
            yield Token.make(document[a], a)
            a += 1
        # Find the core span; trailing punctuation comes after it.
        b = j
        while b > a and _edge_is_punct(document[b - 1]):
            b -= 1
        if a < b:
            yield Token.make(document[a:b], a)
        for p in range(b, j):
            yield Token.make(document[p], p)
        i = j


def tokenize(sentence_text: str) -> list[Token]:
    """Whitespace tokenization with edge-punctuation detachment.

    Leading and trailing non-alphanumeric characters of each whitespace
    chunk become single-character tokens; interior punctuation is kept, so
    hyphenated words ("Epstein-Barr") and decimals ("3.5") stay whole.
    """
    return list(_tokenize_span(sentence_text, 0, len(sentence_text)))


def _default_abbreviations() -> frozenset[str]:
    common = {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.",
        "fig.", "figs.", "eq.", "eqs.", "ref.", "refs.", "no.", "nos.",
        "e.g.", "i.e.", "al.", "etc.", "vs.", "cf.", "ca.", "approx.",
        "spp.", "sp.", "var.",
    }
    # Single initials ("J. Smith") never end a sentence.
    common.update(f"{c}." for c in string.ascii_lowercase)
    return frozenset(common)


DEFAULT_ABBREVIATIONS = _default_abbreviations()

_TERMINATORS = ".?!"


def _word_before(document: str, pos: int) -> str:
    """The whitespace-delimited chunk ending at ``pos`` (exclusive)."""
    i = pos
    while i > 0 and not document[i - 1].isspace():
        i -= 1
    return document[i:pos]


def segment_sentences(
    document: str,
    doc_id: str = "",
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """Split a document at ``[.?!]`` runs followed by whitespace and an
    uppercase letter or digit, then tokenize each sentence.

    A trailing-period split is suppressed when the chunk ending at the
    period (lowercased, period included) is in the abbreviation stoplist.
    Token offsets are absolute into ``document``.  Empty or whitespace-only
    input yields an empty list.
    """
    boundaries = [0]
    n = len(document)
    i = 0
    while i < n:
        if document[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j < n and document[j] in _TERMINATORS:
            j += 1
        # Split only before "whitespace then uppercase-or-digit".
        k = j
        while k < n and document[k].isspace():
            k += 1
        splits = k > j and k < n and (document[k].isupper() or document[k].isdigit())
        if splits and "?" not in document[i:j] and "!" not in document[i:j]:
            if _word_before(document, j).lower() in abbreviations:
                splits = False
        if splits:
            boundaries.append(j)
        i = j
    boundaries.append(n)

    sentences = []
    for start, end in zip(boundaries, boundaries[1:]):
        tokens = tuple(_tokenize_span(document, start, end))
        if tokens:
            sentences.append(Sentence(doc_id, len(sentences), tokens))
    return sentences


@dataclass
class VocabStats:
    """Lowercased token-type counts.

    ``total_tokens`` is always the sum of the retained counts, so the
    identity survives :meth:`top` truncation; merging partial stats from
    parallel workers is associative and commutative.
    """

    counts: dict[str, int]
    total_tokens: int

    @classmethod
    def empty(cls) -> "VocabStats":
        return cls({}, 0)

    def add_sentence(self, sentence: Sentence) -> None:
        for tok in sentence.tokens:
            self.counts[tok.lower] = self.counts.get(tok.lower, 0) + 1
        self.total_tokens += len(sentence.tokens)

    def merge(self, other: "VocabStats") -> "VocabStats":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return VocabStats(dict(merged), self.total_tokens + other.total_tokens)

    def top(self, k: int) -> "VocabStats":
        """The ``k`` most frequent types; cutoff ties break lexicographically."""
        ranked = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        return VocabStats(dict(ranked), sum(c for _, c in ranked))


def build_vocab(sentences: Iterable[Sentence], top_k: int) -> VocabStats:
    """Count lowercased token types over a sentence stream and keep the
    ``top_k`` most frequent (fewer if the stream has fewer types)."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    stats = VocabStats.empty()
    for sentence in sentences:
        stats.add_sentence(sentence)
    return stats.top(top_k)


def read_corpus(path: str | Path) -> Iterator[tuple[str, str]]:
    """Yield ``(doc_id, text)`` pairs from a corpus location.

    A directory is read as one document per file (sorted by name); a single
    file as one document per line.  Text is NFC-normalized on ingest; all
    downstream offsets refer to the normalized string.
    """
    path = Path(path)
    if path.is_dir():
        for p in sorted(path.iterdir()):
            if p.is_file():
                yield p.name, unicodedata.normalize("NFC", p.read_text(encoding="utf-8"))
    elif path.is_file():
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.rstrip("\n")
                if text.strip():
                    yield f"{path.name}:{lineno}", unicodedata.normalize("NFC", text)
    else:
        raise FileNotFoundError(f"corpus path does not exist: {path}")


def iter_sentences(
    path: str | Path,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> Iterator[Sentence]:
    """Stream sentences from a corpus location, document by document."""
    for doc_id, text in read_corpus(path):
        yield from segment_sentences(text, doc_id=doc_id, abbreviations=abbreviations)


def write_token_stream(sentences: Iterable[Sentence], fh) -> int:
    """Write one line per sentence: doc_id, sentence index, then one token
    per tab-separated field.  Returns the number of sentences written."""
    count = 0
    for s in sentences:
        fh.write("\t".join([s.doc_id, str(s.index), *s.texts()]) + "\n")
        count += 1
    return count
