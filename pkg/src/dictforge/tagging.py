"""Dictionary-based tagging and phrase-level evaluation.

A dictionary tagger marks every exact, non-overlapping dictionary match in
a sentence as one entity (B I ... I) and everything else O.  Evaluation is
phrase-level: a predicted entity counts only when both boundaries match a
gold entity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Dictionary",
    "EvalReport",
    "match_phrase_spans",
    "tag_with_dictionary",
    "bio_spans",
    "validate_bio",
    "evaluate",
    "read_dictionary",
    "write_dictionary",
    "read_conll",
    "write_conll",
]

PROVENANCES = ("cca", "cotrain", "manual", "candidate-list")


@dataclass
class Dictionary:
    """Entity phrase list with scores and provenance metadata.

    ``scores`` maps the lowercase space-joined phrase to a ranking score
    (margin, rule strength, or frequency depending on provenance); its
    insertion order is the ranked order.  Phrases are nonempty and unique
    by construction of the mapping.
    """

    scores: dict[str, float]
    provenance: str = "manual"
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if any(not p.strip() for p in self.scores):
            raise ValueError("empty phrase in dictionary")

    def __len__(self) -> int:
        return len(self.scores)

    def __contains__(self, phrase) -> bool:
        if isinstance(phrase, tuple):
            phrase = " ".join(phrase)
        return phrase.lower() in self.scores

    @property
    def phrases(self) -> set[tuple[str, ...]]:
        return {tuple(p.split(" ")) for p in self.scores}


def write_dictionary(dictionary: Dictionary, fh) -> None:
    """Metadata header (``# key: value`` lines, provenance first), then one
    ``phrase TAB score`` row per entry in ranked order."""
    fh.write(f"# provenance: {dictionary.provenance}\n")
    for key in sorted(dictionary.metadata):
        fh.write(f"# {key}: {dictionary.metadata[key]}\n")
    for phrase, score in dictionary.scores.items():
        fh.write(f"{phrase}\t{float(score)!r}\n")


def read_dictionary(path: str | Path) -> Dictionary:
    scores: dict[str, float] = {}
    metadata: dict[str, str] = {}
    provenance = "manual"
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition(":")
                if key.strip() == "provenance":
                    provenance = value.strip()
                elif key.strip():
                    metadata[key.strip()] = value.strip()
                continue
            phrase, score = line.split("\t")
            scores[phrase] = float(score)
    return Dictionary(scores=scores, provenance=provenance, metadata=metadata)


def match_phrase_spans(
    tokens: Sequence[str],
    phrases: set[tuple[str, ...]],
    case_sensitive: bool = False,
) -> list[tuple[int, int, tuple[str, ...]]]:
    """Exact phrase occurrences as (start, end, matched key) triples.

    Longest match wins at each position, scanning left to right, and
    matches never overlap.  Lowercased comparison unless case_sensitive.
    """
    if not phrases:
        return []
    max_len = max(len(p) for p in phrases)
    words = list(tokens) if case_sensitive else [t.lower() for t in tokens]
    spans: list[tuple[int, int, tuple[str, ...]]] = []
    i = 0
    n = len(words)
    while i < n:
        hit = 0
        for length in range(min(max_len, n - i), 0, -1):
            key = tuple(words[i : i + length])
            if key in phrases:
                spans.append((i, i + length, key))
                hit = length
                break
        i += hit if hit else 1
    return spans


def tag_with_dictionary(
    tokens: Sequence[str],
    dictionary: Dictionary,
    case_sensitive: bool = False,
) -> list[str]:
    """BIO tags for one sentence by exact dictionary matching."""
    tags = ["O"] * len(tokens)
    for start, end, _ in match_phrase_spans(
        tokens, dictionary.phrases, case_sensitive
    ):
        tags[start] = "B"
        for j in range(start + 1, end):
            tags[j] = "I"
    return tags


def validate_bio(tags: Sequence[str]) -> None:
    """Raise unless the sequence is well-formed: tags in {B, I, O} and no
    entity starting with I."""
    prev = "O"
    for t in tags:
        if t not in ("B", "I", "O"):
            raise ValueError(f"unknown tag {t!r}")
        if t == "I" and prev == "O":
            raise ValueError("I tag without a preceding B or I")
        prev = t


def bio_spans(tags: Sequence[str]) -> set[tuple[int, int]]:
    """Entity spans as (start, end) token indices, end exclusive.

    Tolerates ill-formed input (an I after O opens a new entity) so
    arbitrary model output can be scored; gold data should be validated
    separately with :func:`validate_bio`.
    """
    spans = set()
    start = None
    for i, t in enumerate(tags):
        if t == "B" or (t == "I" and start is None):
            if start is not None:
                spans.add((start, i))
            start = i
        elif t == "O":
            if start is not None:
                spans.add((start, i))
                start = None
    if start is not None:
        spans.add((start, len(tags)))
    return spans


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "EvalReport":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return cls(tp, fp, fn, p, r, f1)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def evaluate(
    predicted: Sequence[Sequence[str]], gold: Sequence[Sequence[str]]
) -> EvalReport:
    """Exact-extent phrase evaluation over aligned tag sequences."""
    if len(predicted) != len(gold):
        raise ValueError(
            f"sentence count mismatch: {len(predicted)} predicted vs {len(gold)} gold"
        )
    tp = fp = fn = 0
    for idx, (p, g) in enumerate(zip(predicted, gold)):
        if len(p) != len(g):
            raise ValueError(f"token count mismatch in sentence {idx}")
        pred_spans = bio_spans(p)
        gold_spans = bio_spans(g)
        tp += len(pred_spans & gold_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    return EvalReport.from_counts(tp, fp, fn)


def read_conll(path: str | Path, strict: bool = False) -> list[tuple[list[str], list[str]]]:
    """CoNLL-style file: ``token TAB tag`` rows, blank line between
    sentences.  With strict=True every sentence must be well-formed BIO."""
    sentences: list[tuple[list[str], list[str]]] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush():
        if tokens:
            if strict:
                validate_bio(tags)
            sentences.append((list(tokens), list(tags)))
            tokens.clear()
            tags.clear()

    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            token, _, tag = line.partition("\t")
            tokens.append(token)
            tags.append(tag)
    flush()
    return sentences


def write_conll(sentences: Iterable[tuple[Sequence[str], Sequence[str]]], fh) -> None:
    for tokens, tags in sentences:
        for token, tag in zip(tokens, tags):
            fh.write(f"{token}\t{tag}\n")
        fh.write("\n")
