import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medrouter.errors import EmptyText
from medrouter.text import canonicalize_text, cosine, embed

from helpers import reference_cosine


class TestCanonicalize:
    def test_lowercases_and_trims(self):
        assert canonicalize_text("  Chest X-ray ") == "chest x-ray"

    def test_collapses_internal_whitespace(self):
        assert canonicalize_text("lung \t  opacity") == "lung opacity"

    def test_strips_punctuation_except_hyphen_and_space(self):
        assert canonicalize_text("covid-19!") == "covid-19"
        assert canonicalize_text("t.b.") == "tb"
        assert canonicalize_text("(optic cup)") == "optic cup"

    def test_empty_results(self):
        assert canonicalize_text("...") == ""
        assert canonicalize_text("   ") == ""

    @given(st.text(max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, text):
        once = canonicalize_text(text)
        assert canonicalize_text(once) == once


class TestEmbedding:
    def test_trigram_counts_with_sentinels(self):
        vec = embed("abc")
        assert vec.counts == {"^ab": 1, "abc": 1, "bc$": 1}
        assert vec.norm_sq == 3

    def test_repeated_trigrams_accumulate(self):
        vec = embed("aaaa")
        # ^aa aaa aaa aa$
        assert vec.counts == {"^aa": 1, "aaa": 2, "aa$": 1}
        assert vec.norm_sq == 1 + 4 + 1

    def test_canonicalizes_before_embedding(self):
        assert embed("  TB ").counts == embed("tb").counts

    def test_short_tokens_embed(self):
        assert embed("a").counts == {"^a$": 1}

    def test_empty_text_raises(self):
        with pytest.raises(EmptyText):
            embed("!!!")

    def test_normalized_weights_have_unit_norm(self):
        vec = embed("pneumonia")
        assert vec.norm == pytest.approx(1.0)


class TestCosine:
    def test_identical_terms_exactly_one(self):
        assert cosine(embed("covid"), embed("covid")) == 1.0

    def test_disjoint_terms_exactly_zero(self):
        assert cosine(embed("xyz"), embed("abc")) == 0.0

    def test_hand_computed_third(self):
        # ^ab abc bc$ vs ^ab abd bd$ share one trigram of three each.
        assert cosine(embed("abc"), embed("abd")) == 1 / 3

    @given(st.text(alphabet="abcdefgh -", min_size=1, max_size=12),
           st.text(alphabet="abcdefgh -", min_size=1, max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_matches_reference_and_is_symmetric(self, a, b):
        ca, cb = canonicalize_text(a), canonicalize_text(b)
        if not ca or not cb:
            return
        got = cosine(embed(a), embed(b))
        assert got == cosine(embed(b), embed(a))
        assert 0.0 <= got <= 1.0 + 1e-12
        assert got == pytest.approx(reference_cosine(ca, cb), abs=0)

    @given(st.text(alphabet="abcdefgh", min_size=1, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_self_similarity_is_one(self, term):
        assert cosine(embed(term), embed(term)) == 1.0
