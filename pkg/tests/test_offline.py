import pytest

from medrouter.errors import NoTaskRecognized
from medrouter.lexicon import SynonymLexicon, default_lexicon
from medrouter.offline import offline_parse
from medrouter.plan import ConditionKind
from medrouter.registry import Intent, ReferenceVocab

VOCAB = ReferenceVocab(
    targets=("covid", "lung", "lung opacity", "pneumonia", "tb"),
    modalities=("chest x-ray", "cxr"),
)
LEX = default_lexicon()


def parse(query, vocab=VOCAB, lexicon=LEX):
    return offline_parse(query, vocab, lexicon)


class TestIntentDetection:
    @pytest.mark.parametrize("verb", ["segment", "isolate", "delineate", "outline", "delimit"])
    def test_segmentation_keywords(self, verb):
        plan = parse(f"Please {verb} the lung region.")
        assert plan.tasks[0].intent is Intent.SEGMENTATION

    @pytest.mark.parametrize("verb", ["classify", "detect", "check", "screen", "assess", "examine", "diagnose"])
    def test_classification_keywords(self, verb):
        plan = parse(f"{verb} this chest x-ray for pneumonia.")
        assert plan.tasks[0].intent is Intent.CLASSIFICATION

    def test_question_form_is_classification(self):
        plan = parse("Does this chest x-ray show pneumonia?")
        assert plan.tasks[0].intent is Intent.CLASSIFICATION

    def test_earliest_keyword_wins(self):
        plan = parse("Segment the lung, then check it.")
        assert plan.tasks[0].intent is Intent.SEGMENTATION


class TestTermRecognition:
    def test_target_and_modality_extracted(self):
        task = parse("Check this chest x-ray for pneumonia.").tasks[0]
        assert task.raw_target == "pneumonia"
        assert task.raw_modality == "chest x-ray"

    def test_modality_optional(self):
        task = parse("Check for pneumonia.").tasks[0]
        assert task.raw_modality is None

    def test_longest_vocabulary_match_wins(self):
        task = parse("Assess the lung opacity on this cxr.").tasks[0]
        assert task.raw_target == "lung opacity"

    def test_lexicon_keys_recognized(self):
        # "tuberculosis" is not in the vocabulary but maps onto it.
        task = parse("Screen this cxr for tuberculosis.").tasks[0]
        assert task.raw_target == "tuberculosis"

    def test_lexicon_key_for_other_side_not_a_target(self):
        # "chest radiograph" maps to the modality side only.
        task = parse("Check the chest radiograph for pneumonia.").tasks[0]
        assert task.raw_target == "pneumonia"
        assert task.raw_modality == "chest radiograph"

    def test_clause_without_target_yields_no_task(self):
        with pytest.raises(NoTaskRecognized):
            parse("Check this image carefully.")

    def test_word_boundary_respected(self):
        # "tbd" must not match the vocabulary token "tb".
        with pytest.raises(NoTaskRecognized):
            parse("Check the tbd item.")


class TestConditions:
    @pytest.mark.parametrize("marker", ["if confirmed", "upon confirmation", "if found", "if detected", "if present"])
    def test_positive_markers(self, marker):
        plan = parse(f"Check for pneumonia. {marker}, segment the lungs.")
        cond = plan.tasks[1].condition
        assert cond.kind is ConditionKind.OUTCOME_POSITIVE
        assert cond.source_task == "t1"

    @pytest.mark.parametrize("marker", ["if not", "if negative", "if absent", "if inconclusive"])
    def test_negative_markers(self, marker):
        plan = parse(f"Check for pneumonia. {marker}, screen for tb.")
        assert plan.tasks[1].condition.kind is ConditionKind.OUTCOME_NEGATIVE

    def test_condition_adds_dependency_edge(self):
        plan = parse("Check for pneumonia. If confirmed, segment the lungs.")
        assert plan.tasks[1].depends_on == ("t1",)

    def test_marker_on_first_clause_is_dropped(self):
        plan = parse("If present, check for pneumonia.")
        assert plan.tasks[0].condition is None

    def test_unconditioned_second_task_has_no_edge(self):
        plan = parse("Check for pneumonia. Also screen for tb.")
        assert len(plan.tasks) == 2
        assert plan.tasks[1].condition is None
        assert plan.tasks[1].depends_on == ()


class TestClauseHandling:
    def test_multi_sentence_queries_split(self):
        plan = parse("Check for covid. If confirmed, check for pneumonia. Then segment the lungs.")
        assert [t.intent for t in plan.tasks] == [
            Intent.CLASSIFICATION,
            Intent.CLASSIFICATION,
            Intent.SEGMENTATION,
        ]

    def test_empty_clauses_ignored(self):
        plan = parse("Check for covid...  !!  ")
        assert len(plan.tasks) == 1

    def test_no_task_recognized(self):
        with pytest.raises(NoTaskRecognized):
            parse("Good morning.")

    def test_query_preserved_verbatim(self):
        query = "Check for covid."
        assert parse(query).query == query


class TestEmptyVocabularyFallback:
    def test_lexicon_terms_recognized_when_registry_empty(self):
        empty = ReferenceVocab(targets=(), modalities=())
        plan = offline_parse("Isolate the lung region.", empty, LEX)
        assert plan.tasks[0].intent is Intent.SEGMENTATION
        assert plan.tasks[0].raw_target == "lung"
        assert plan.tasks[0].raw_modality is None

    def test_empty_vocab_and_empty_lexicon_recognizes_nothing(self):
        empty = ReferenceVocab(targets=(), modalities=())
        with pytest.raises(NoTaskRecognized):
            offline_parse("Isolate the lung region.", empty, SynonymLexicon())
