import json

import pytest

from medrouter.errors import ConfigError
from medrouter.lexicon import SynonymLexicon, default_lexicon, load_lexicon


class TestSynonymLexicon:
    def test_lookup_canonicalizes_the_key(self):
        lex = SynonymLexicon({"Tuberculosis": "TB"})
        assert lex.get("  TUBERCULOSIS. ") == "tb"

    def test_unmapped_term_returns_none(self):
        assert SynonymLexicon({}).get("lung") is None

    def test_contains_and_len(self):
        lex = SynonymLexicon({"lungs": "lung"})
        assert "LUNGS" in lex
        assert "heart" not in lex
        assert len(lex) == 1

    def test_items_sorted(self):
        lex = SynonymLexicon({"b": "x", "a": "y"})
        assert list(lex.items()) == [("a", "y"), ("b", "x")]

    def test_rejects_entry_that_canonicalizes_to_empty(self):
        with pytest.raises(ConfigError):
            SynonymLexicon({"...": "lung"})
        with pytest.raises(ConfigError):
            SynonymLexicon({"lung": "!!"})

    def test_rejects_self_mapping(self):
        with pytest.raises(ConfigError):
            SynonymLexicon({"Lung": "lung"})


class TestLoadLexicon:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "lex.json"
        path.write_text(json.dumps({"lungs": "lung"}))
        assert load_lexicon(path).get("lungs") == "lung"

    def test_rejects_non_object(self, tmp_path):
        path = tmp_path / "lex.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_lexicon(path)

    def test_rejects_non_string_values(self, tmp_path):
        path = tmp_path / "lex.json"
        path.write_text(json.dumps({"lungs": 3}))
        with pytest.raises(ConfigError):
            load_lexicon(path)


class TestDefaultLexicon:
    def test_contains_documented_mappings(self):
        lex = default_lexicon()
        assert lex.get("tuberculosis") == "tb"
        assert lex.get("lungs") == "lung"
        assert lex.get("covid-19") == "covid"
        assert lex.get("chest radiograph") == "cxr"

    def test_keeps_vocabulary_terms_unmapped(self):
        # "chest x-ray" and "pneumonia" are registry vocabulary in their own
        # right; mapping them would corrupt scan-time normalization.
        lex = default_lexicon()
        assert lex.get("chest x-ray") is None
        assert lex.get("pneumonia") is None
        assert lex.get("tb") is None
