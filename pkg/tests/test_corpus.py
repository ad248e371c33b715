"""Segmentation, tokenization, and vocabulary counting."""

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dictforge.corpus import (
    Sentence,
    Token,
    VocabStats,
    build_vocab,
    read_corpus,
    segment_sentences,
    tokenize,
    word_shape,
    write_token_stream,
)


def texts(tokens):
    return [t.text for t in tokens]


class TestWordShape:
    @pytest.mark.parametrize(
        "word,shape",
        [
            ("virus", "allLower"),
            ("Influenza", "initCap"),
            ("HIV", "allCaps"),
            ("pH", "mixed"),
            ("Epstein-Barr", "mixed"),
            ("McDonald", "mixed"),
            ("3.5", "nonAlpha"),
            ("(", "nonAlpha"),
            ("A", "allCaps"),
            ("x", "allLower"),
        ],
    )
    def test_table(self, word, shape):
        assert word_shape(word) == shape


class TestTokenize:
    def test_detaches_edge_punctuation(self):
        got = texts(tokenize("the (well-known) Epstein-Barr virus."))
        assert got == ["the", "(", "well-known", ")", "Epstein-Barr", "virus", "."]

    def test_keeps_interior_periods_and_hyphens(self):
        assert texts(tokenize("pH 3.5 rises")) == ["pH", "3.5", "rises"]
        assert texts(tokenize("state-of-the-art")) == ["state-of-the-art"]

    def test_comma_lists(self):
        got = texts(tokenize("measles, mumps, and rubella"))
        assert got == ["measles", ",", "mumps", ",", "and", "rubella"]

    def test_offsets_roundtrip(self):
        text = 'She said: "no." (Twice.)'
        for tok in tokenize(text):
            assert text[tok.char_start : tok.char_end] == tok.text

    def test_empty_and_whitespace(self):
        assert tokenize("") == []
        assert tokenize("   \t\n") == []

    # Oracle: tokens partition the non-whitespace characters in order.
    @given(st.text(alphabet="ab.?!,-() \tAB3", max_size=60))
    def test_covers_nonspace_chars(self, doc):
        toks = tokenize(doc)
        assert "".join(texts(toks)) == "".join(c for c in doc if not c.isspace())
        for a, b in zip(toks, toks[1:]):
            assert a.char_end <= b.char_start

    @given(st.text(alphabet="ab.?!,-() AB3", max_size=60))
    def test_idempotent_on_rejoined_tokens(self, doc):
        once = texts(tokenize(doc))
        again = texts(tokenize(" ".join(once)))
        assert again == once


class TestSegmentation:
    def test_basic_split(self):
        sents = segment_sentences("Viruses mutate. HIV is one.")
        assert [texts(s.tokens) for s in sents] == [
            ["Viruses", "mutate", "."],
            ["HIV", "is", "one", "."],
        ]
        assert [s.index for s in sents] == [0, 1]

    def test_abbreviation_suppresses_split(self):
        sents = segment_sentences("Dr. Smith studied measles.")
        assert len(sents) == 1
        assert texts(sents[0].tokens)[:3] == ["Dr", ".", "Smith"]

    def test_single_initial_suppresses_split(self):
        sents = segment_sentences("J. Smith wrote it. B. Jones read it.")
        assert len(sents) == 2

    def test_et_al_suppresses_split(self):
        sents = segment_sentences("See Smith et al. Nature has the details.")
        assert len(sents) == 1

    def test_split_before_digit(self):
        sents = segment_sentences("It ended. 4 remained.")
        assert len(sents) == 2

    def test_abbreviation_before_digit(self):
        sents = segment_sentences("It took approx. 3 days.")
        assert len(sents) == 1

    def test_no_split_before_lowercase(self):
        sents = segment_sentences("It spread. then stopped.")
        assert len(sents) == 1

    def test_question_and_exclamation(self):
        sents = segment_sentences("Did it mutate? Yes! It spread fast!!! Then stopped.")
        assert [texts(s.tokens) for s in sents] == [
            ["Did", "it", "mutate", "?"],
            ["Yes", "!"],
            ["It", "spread", "fast", "!", "!", "!"],
            ["Then", "stopped", "."],
        ]

    def test_interior_decimal_not_a_boundary(self):
        sents = segment_sentences("Version 2.0 shipped. Next came 3.0.")
        assert len(sents) == 2
        assert "2.0" in texts(sents[0].tokens)

    def test_offsets_are_document_absolute(self):
        doc = "One thing. Another Thing."
        for s in segment_sentences(doc, doc_id="d"):
            assert s.doc_id == "d"
            for tok in s.tokens:
                assert doc[tok.char_start : tok.char_end] == tok.text

    def test_empty_document(self):
        assert segment_sentences("") == []
        assert segment_sentences("   \n  ") == []

    # Oracle: segmenting never invents or drops tokens.
    @given(st.text(alphabet="ab .?!AB3x", max_size=80))
    @settings(max_examples=60)
    def test_token_stream_matches_whole_document(self, doc):
        from_sentences = [
            t.text for s in segment_sentences(doc) for t in s.tokens
        ]
        assert from_sentences == texts(tokenize(doc))


def sent(words, doc_id="d", index=0):
    toks = []
    pos = 0
    for w in words:
        toks.append(Token.make(w, pos))
        pos += len(w) + 1
    return Sentence(doc_id, index, tuple(toks))


class TestVocab:
    def test_counts_match_counter_oracle(self):
        sents = [sent(["a", "B", "b", "a"]), sent(["c", "A"], index=1)]
        stats = build_vocab(sents, top_k=10)
        oracle = Counter(
            t.lower for s in sents for t in s.tokens
        )
        assert stats.counts == dict(oracle)
        assert stats.total_tokens == sum(oracle.values())

    def test_top_k_tie_breaks_lexicographically(self):
        stats = build_vocab([sent(["b", "b", "a", "a", "c"])], top_k=1)
        assert stats.counts == {"a": 2}
        assert stats.total_tokens == 2

    def test_total_tracks_retained_counts_after_truncation(self):
        stats = build_vocab([sent(["a", "a", "b", "c"])], top_k=2)
        assert stats.counts == {"a": 2, "b": 1}
        assert stats.total_tokens == 3

    def test_rejects_nonpositive_k(self):
        with pytest.raises(ValueError):
            build_vocab([], top_k=0)

    @given(
        st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=30),
        st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=30),
    )
    def test_merge_equals_combined_pass(self, left, right):
        a = build_vocab([sent(left)] if left else [], top_k=100)
        b = build_vocab([sent(right)] if right else [], top_k=100)
        merged = a.merge(b)
        combined = build_vocab(
            ([sent(left)] if left else []) + ([sent(right, index=1)] if right else []),
            top_k=100,
        )
        assert merged.counts == combined.counts
        assert merged.total_tokens == combined.total_tokens

    def test_merge_is_commutative(self):
        a = VocabStats({"x": 2, "y": 1}, 3)
        b = VocabStats({"y": 4, "z": 1}, 5)
        assert a.merge(b) == b.merge(a)


class TestCorpusIO:
    def test_file_is_one_document_per_line(self, tmp_path):
        p = tmp_path / "corpus.txt"
        p.write_text("First doc here.\n\nThird line doc.\n", encoding="utf-8")
        docs = list(read_corpus(p))
        assert [d for d, _ in docs] == ["corpus.txt:1", "corpus.txt:3"]

    def test_directory_is_one_document_per_file(self, tmp_path):
        (tmp_path / "b.txt").write_text("Beta.", encoding="utf-8")
        (tmp_path / "a.txt").write_text("Alpha.", encoding="utf-8")
        docs = list(read_corpus(tmp_path))
        assert [d for d, _ in docs] == ["a.txt", "b.txt"]
        assert [t for _, t in docs] == ["Alpha.", "Beta."]

    def test_missing_path_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            list(read_corpus(tmp_path / "nope"))

    def test_nfc_normalization(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("café menu\n", encoding="utf-8")  # decomposed accent
        (_, text), = read_corpus(p)
        assert "café" in text

    def test_token_stream_format(self, tmp_path):
        import io

        out = io.StringIO()
        n = write_token_stream([sent(["Hi", "there", "."])], out)
        assert n == 1
        assert out.getvalue() == "d\t0\tHi\tthere\t.\n"
