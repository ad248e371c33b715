"""Synthetic benchmark corpus with planted entities and distractors.

The generator invents nonce entity names (capitalized) and distractor
phrases (lowercase), then writes sentences where both appear after the
same trigger bigrams so pattern extraction recovers them all.  Class
membership leaks only through the surrounding context words, which are
drawn from class-specific pools with a configurable fidelity (an
occurrence gets the other class's context with probability
1 - context_fidelity), and through capitalization.  The generator keeps
the planted truth, so downstream dictionaries and taggers can be scored
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SynthSpec", "SynthCorpus", "generate"]

TRIGGERS = (("cases", "of"), ("reports", "of"), ("patients", "with"))
STOP_AFTER = ("were", "are", "was", "is", "has", "had")
ENTITY_LEFT = ("contagious", "spreading", "deadly", "virulent", "untreated")
ENTITY_RIGHT = ("outbreaks", "infections", "symptoms", "quarantines", "fevers")
DISTRACTOR_LEFT = ("quarterly", "routine", "scheduled", "internal", "archived")
DISTRACTOR_RIGHT = ("budgets", "meetings", "audits", "invoices", "spreadsheets")
GLUE = (
    "the", "a", "team", "office", "regional", "staff", "noted", "review",
    "during", "process", "before", "after", "local", "group", "board",
    "later", "again", "also", "update", "summary", "early", "final",
)

_SYLLABLES = (
    "ba", "ce", "da", "fe", "gi", "ho", "ka", "le", "mi", "no", "pa", "qui",
    "ra", "se", "ta", "vu", "we", "xi", "yo", "zu", "lor", "ven", "dra",
    "mek", "sil", "tor", "nar", "bel", "cru", "fen",
)


@dataclass(frozen=True)
class SynthSpec:
    """Generator knobs; one seed drives every random choice."""

    n_sentences: int = 20000
    n_entities: int = 60
    n_distractors: int = 220
    context_fidelity: float = 0.92
    mention_rate: float = 0.65
    trigger_rate: float = 0.85
    entity_share: float = 0.4
    cap_distractor_rate: float = 0.3
    min_mentions: int = 5
    seeds_per_class: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_sentences < 2000:
            raise ValueError("need at least 2000 sentences for the labeled tail")
        if self.n_entities < self.seeds_per_class:
            raise ValueError("fewer entities than seeds")
        if self.n_distractors < self.seeds_per_class:
            raise ValueError("fewer distractors than seeds")
        if not 0.5 < self.context_fidelity <= 1.0:
            raise ValueError("context_fidelity must be in (0.5, 1]")
        if not 0.0 < self.mention_rate < 1.0:
            raise ValueError("mention_rate must be in (0, 1)")
        if not 0.0 < self.entity_share < 1.0:
            raise ValueError("entity_share must be in (0, 1)")
        if not 0.0 <= self.cap_distractor_rate < 1.0:
            raise ValueError("cap_distractor_rate must be in [0, 1)")


@dataclass
class SynthCorpus:
    """Generated sentences with gold tags and the planted truth."""

    sentences: list[list[str]]
    tags: list[list[str]]
    entities: list[str]
    distractors: list[str]
    spec: SynthSpec

    def splits(self) -> dict[str, list[tuple[list[str], list[str]]]]:
        """Labeled tail: 400 tagger-training, 300 dev, 500 test sentences."""
        paired = list(zip(self.sentences, self.tags))
        return {
            "train": paired[-1200:-800],
            "dev": paired[-800:-500],
            "test": paired[-500:],
        }

    def write(self, outdir: str | Path) -> dict[str, Path]:
        """Corpus text, CoNLL splits, truth lists, seeds, and patterns."""
        from .tagging import write_conll

        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths: dict[str, Path] = {}

        paths["corpus"] = outdir / "corpus.txt"
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for toks in self.sentences:
                fh.write(" ".join(toks) + "\n")

        for name, rows in self.splits().items():
            paths[name] = outdir / f"{name}.conll"
            with open(paths[name], "w", encoding="utf-8") as fh:
                write_conll(rows, fh)

        for name, phrases in (
            ("entities", self.entities),
            ("distractors", self.distractors),
        ):
            paths[name] = outdir / f"{name}.txt"
            with open(paths[name], "w", encoding="utf-8") as fh:
                fh.write("\n".join(phrases) + "\n")

        k = self.spec.seeds_per_class
        paths["seeds"] = outdir / "seeds.txt"
        with open(paths["seeds"], "w", encoding="utf-8") as fh:
            fh.write("[positive]\n")
            fh.write("\n".join(self.entities[:k]) + "\n")
            fh.write("[negative]\n")
            fh.write("\n".join(self.distractors[:k]) + "\n")

        paths["patterns"] = outdir / "patterns.txt"
        with open(paths["patterns"], "w", encoding="utf-8") as fh:
            for trigger in TRIGGERS:
                fh.write(f"after {' '.join(trigger)}\n")
        return paths


def _pick(rng: np.random.Generator, pool):
    return pool[int(rng.integers(len(pool)))]


def _nonce_word(rng: np.random.Generator, taken: set[str]) -> str:
    reserved = set(GLUE + STOP_AFTER + ENTITY_LEFT + ENTITY_RIGHT)
    reserved |= set(DISTRACTOR_LEFT + DISTRACTOR_RIGHT)
    reserved |= {w for t in TRIGGERS for w in t}
    while True:
        word = "".join(
            _pick(rng, _SYLLABLES) for _ in range(int(rng.integers(2, 4)))
        )
        if word not in taken and word not in reserved:
            taken.add(word)
            return word


def _invent_phrases(
    rng: np.random.Generator, count: int, cap_rate: float, taken: set[str]
) -> list[str]:
    phrases = []
    for _ in range(count):
        words = [
            _nonce_word(rng, taken)
            for _ in range(1 if rng.random() < 0.6 else 2)
        ]
        if rng.random() < cap_rate:
            words = [w.capitalize() for w in words]
        phrases.append(" ".join(words))
    return phrases


def _mention_sentence(
    rng: np.random.Generator,
    surface: list[str],
    is_entity: bool,
    with_trigger: bool,
    fidelity: float,
) -> tuple[list[str], list[str]]:
    # one fidelity draw per occurrence: a contaminated mention takes the
    # other class's context on both sides
    matched = rng.random() < fidelity
    if is_entity == matched:
        left_pool, right_pool = ENTITY_LEFT, ENTITY_RIGHT
    else:
        left_pool, right_pool = DISTRACTOR_LEFT, DISTRACTOR_RIGHT
    toks = [_pick(rng, GLUE) for _ in range(int(rng.integers(0, 4)))]
    if with_trigger:
        toks.append(_pick(rng, left_pool))
        toks.extend(_pick(rng, TRIGGERS))
    else:
        # fill the whole left window with class words so untriggered
        # mentions carry as much signal as triggered ones
        toks.extend(_pick(rng, left_pool) for _ in range(3))
    start = len(toks)
    toks.extend(surface)
    end = len(toks)
    toks.append(_pick(rng, STOP_AFTER))
    toks.append(_pick(rng, right_pool))
    toks.append(_pick(rng, right_pool))
    toks.extend(_pick(rng, GLUE) for _ in range(int(rng.integers(0, 3))))
    tags = ["O"] * len(toks)
    if is_entity:
        tags[start] = "B"
        for i in range(start + 1, end):
            tags[i] = "I"
    return toks, tags


def _filler_sentence(rng: np.random.Generator) -> tuple[list[str], list[str]]:
    toks = [_pick(rng, GLUE) for _ in range(int(rng.integers(5, 11)))]
    return toks, ["O"] * len(toks)


def generate(spec: SynthSpec = SynthSpec()) -> SynthCorpus:
    rng = np.random.default_rng(spec.seed)
    taken: set[str] = set()
    entities = _invent_phrases(rng, spec.n_entities, 1.0, taken)
    distractors = _invent_phrases(
        rng, spec.n_distractors, spec.cap_distractor_rate, taken
    )

    # every planted phrase gets min_mentions guaranteed trigger mentions
    # so extraction recall over the truth is exactly 1
    entity_surfaces = [p.split(" ") for p in entities]
    distractor_surfaces = [p.split(" ") for p in distractors]
    schedule: list[tuple[list[str], bool, bool]] = [
        (surface, is_entity, True)
        for surfaces, is_entity in (
            (entity_surfaces, True),
            (distractor_surfaces, False),
        )
        for surface in surfaces
        for _ in range(spec.min_mentions)
    ]
    n_mentions = max(
        int(round(spec.mention_rate * spec.n_sentences)), len(schedule)
    )
    if n_mentions > spec.n_sentences:
        raise ValueError("mention schedule exceeds sentence budget")
    while len(schedule) < n_mentions:
        if rng.random() < spec.entity_share:
            pool, is_entity = entity_surfaces, True
        else:
            pool, is_entity = distractor_surfaces, False
        surface = pool[int(rng.integers(len(pool)))]
        schedule.append((surface, is_entity, rng.random() < spec.trigger_rate))

    rows = [
        _mention_sentence(rng, surface, is_entity, with_trigger, spec.context_fidelity)
        for surface, is_entity, with_trigger in schedule
    ]
    rows.extend(_filler_sentence(rng) for _ in range(spec.n_sentences - len(rows)))
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    sentences = [toks for toks, _ in rows]
    tags = [t for _, t in rows]
    return SynthCorpus(
        sentences=sentences,
        tags=tags,
        entities=[p.lower() for p in entities],
        distractors=[p.lower() for p in distractors],
        spec=spec,
    )
