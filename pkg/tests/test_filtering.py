"""Keyword filtering, retention accounting, and recall against gold spans."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lessonminer.filtering import (
    DegenerateGoldSpan,
    EmptyKeywordList,
    FilteredTranscript,
    OrphanAnnotation,
    completeness_list,
    filter_corpus,
    filter_transcript,
    filtered_from_document,
    filtered_to_dict,
    recall_report,
    reduction_report,
    tokenize_corpus,
    tokenize_transcript,
)
from lessonminer.keyness import KeywordList

from conftest import make_annotation, make_corpus, make_transcript


TEXTS = [
    "vamos a corregir los deberes de ayer",
    "si estudias el examen sera facil",
    "la pizarra esta llena borradla por favor",
    "el examen del viernes cuenta doble",
    "sacad una hoja en blanco ahora",
]


def klist(*keywords, name="kw"):
    return KeywordList(name=name, keywords=tuple(keywords))


class TestFilterTranscript:
    def test_retains_matching_segments_with_hits(self):
        transcript = make_transcript("t1", TEXTS)
        out = filter_transcript(transcript, klist("examen"))
        assert out.retained == frozenset({1, 3})
        assert out.matches == {1: frozenset({"examen"}), 3: frozenset({"examen"})}

    def test_match_is_on_normalized_tokens(self):
        transcript = make_transcript("t1", ["el EXAMEN, está cerca"])
        out = filter_transcript(transcript, klist("examen"))
        assert out.retained == frozenset({0})

    def test_window_expands_but_does_not_add_matches(self):
        transcript = make_transcript("t1", TEXTS)
        out = filter_transcript(transcript, klist("pizarra"), window=1)
        assert out.retained == frozenset({1, 2, 3})
        assert set(out.matches) == {2}

    def test_window_clips_at_transcript_bounds(self):
        transcript = make_transcript("t1", TEXTS)
        out = filter_transcript(transcript, klist("vamos"), window=3)
        assert out.retained == frozenset({0, 1, 2, 3})

    def test_no_match_retains_nothing(self):
        transcript = make_transcript("t1", TEXTS)
        out = filter_transcript(transcript, klist("zanahoria"))
        assert out.retained == frozenset()
        assert out.retained_tokens() == 0

    def test_empty_list_rejected(self):
        transcript = make_transcript("t1", TEXTS)
        with pytest.raises(EmptyKeywordList):
            filter_transcript(transcript, KeywordList(name="empty", keywords=()))

    def test_negative_window_rejected(self):
        transcript = make_transcript("t1", TEXTS)
        with pytest.raises(ValueError):
            filter_transcript(transcript, klist("examen"), window=-1)

    def test_precomputed_token_sets_change_nothing(self):
        transcript = make_transcript("t1", TEXTS)
        cached = tokenize_transcript(transcript)
        direct = filter_transcript(transcript, klist("examen"), window=1)
        via_cache = filter_transcript(
            transcript, klist("examen"), window=1, token_sets=cached
        )
        assert direct == via_cache

    def test_corpus_level_cache_matches_direct(self):
        corpus = make_corpus(
            [make_transcript("t1", TEXTS), make_transcript("t2", TEXTS[::-1])]
        )
        cache = tokenize_corpus(corpus)
        assert filter_corpus(corpus, klist("examen"), corpus_tokens=cache) == filter_corpus(
            corpus, klist("examen")
        )


class TestReductionReport:
    def test_token_weighted_fraction(self):
        corpus = make_corpus([make_transcript("t1", ["uno dos tres", "cuatro", "cinco seis"])])
        filtered = filter_corpus(corpus, klist("cuatro"))
        report = reduction_report(corpus, filtered, words_per_page=2)
        assert report.total_tokens == 6
        assert report.retained_tokens == 1
        assert report.retained_fraction == pytest.approx(1 / 6)
        assert report.total_pages == 3.0
        assert report.retained_pages == 0.5


class TestRecallReport:
    def test_any_retained_span_segment_counts(self):
        corpus = make_corpus([make_transcript("t1", TEXTS)])
        filtered = filter_corpus(corpus, klist("examen"))
        gold = [
            make_annotation("t1", 0, 1, coder_id="g", annotation_id="hit"),
            make_annotation("t1", 4, 4, coder_id="g", annotation_id="miss"),
        ]
        report = recall_report(filtered, gold)
        assert report.gold_total == 2
        assert report.gold_retained == 1
        assert report.recall == 0.5
        assert report.missed == ("miss",)

    def test_coverage_is_token_weighted(self):
        corpus = make_corpus([make_transcript("t1", ["uno dos tres", "examen"])])
        filtered = filter_corpus(corpus, klist("examen"))
        report = recall_report(filtered, [make_annotation("t1", 0, 1)])
        assert report.coverage[0].retained
        assert report.coverage[0].coverage == pytest.approx(1 / 4)

    def test_orphan_annotation_rejected(self):
        corpus = make_corpus([make_transcript("t1", TEXTS)])
        filtered = filter_corpus(corpus, klist("examen"))
        with pytest.raises(OrphanAnnotation):
            recall_report(filtered, [make_annotation("other", 0, 0)])

    def test_empty_gold_reports_zero(self):
        corpus = make_corpus([make_transcript("t1", TEXTS)])
        report = recall_report(filter_corpus(corpus, klist("examen")), [])
        assert report.recall == 0.0
        assert report.gold_total == 0


class TestCompletenessList:
    def test_guarantees_full_recall(self):
        corpus = make_corpus(
            [make_transcript("t1", TEXTS), make_transcript("t2", TEXTS[::-1])]
        )
        gold = [
            make_annotation("t1", 1, 2),
            make_annotation("t2", 0, 0, annotation_id="g2"),
        ]
        full = completeness_list(corpus, gold)
        filtered = filter_corpus(corpus, full)
        assert recall_report(filtered, gold).recall == 1.0

    def test_tokenless_span_rejected(self):
        corpus = make_corpus([make_transcript("t1", ["y o", "examen hoy"])])
        with pytest.raises(DegenerateGoldSpan):
            completeness_list(corpus, [make_annotation("t1", 0, 0)])


class TestFilteredDocument:
    def test_round_trip(self):
        corpus = make_corpus(
            [make_transcript("t1", TEXTS), make_transcript("t2", TEXTS[::-1])]
        )
        filtered = filter_corpus(corpus, klist("examen", "pizarra"), window=1)
        document = filtered_to_dict(filtered, corpus, "kw", "deadbeef0000", window=1)
        assert document["keyword_list"] == "kw"
        assert document["config_hash"] == "deadbeef0000"
        assert filtered_from_document(document, corpus) == filtered

    def test_segments_listed_in_index_order_with_text(self):
        corpus = make_corpus([make_transcript("t1", TEXTS)])
        filtered = filter_corpus(corpus, klist("examen"))
        document = filtered_to_dict(filtered, corpus, "kw", "hash", window=0)
        segments = document["transcripts"][0]["segments"]
        assert [s["index"] for s in segments] == [1, 3]
        assert segments[0]["text"] == TEXTS[1]
        assert segments[0]["matched"] == ["examen"]


def random_instance(rng: random.Random):
    """A random transcript over a tiny vocabulary plus two nested keyword lists."""
    vocabulary = [f"tok{i:02d}" for i in range(12)]
    texts = [
        " ".join(rng.choice(vocabulary) for _ in range(rng.randint(1, 6)))
        for _ in range(rng.randint(1, 30))
    ]
    transcript = make_transcript("t1", texts)
    pool = rng.sample(vocabulary, rng.randint(1, 8))
    split = rng.randint(1, len(pool))
    small = klist(*pool[:split], name="small")
    big = klist(*pool, name="big")
    return transcript, small, big


class TestFilteringProperties:
    def test_list_monotonicity(self):
        rng = random.Random(101)
        for _ in range(200):
            transcript, small, big = random_instance(rng)
            window = rng.randint(0, 2)
            assert filter_transcript(transcript, small, window).retained <= (
                filter_transcript(transcript, big, window).retained
            )

    def test_window_monotonicity(self):
        rng = random.Random(202)
        for _ in range(200):
            transcript, _, big = random_instance(rng)
            w = rng.randint(0, 2)
            assert filter_transcript(transcript, big, w).retained <= (
                filter_transcript(transcript, big, w + 1).retained
            )

    def test_idempotence_refiltering_retained_keeps_everything(self):
        rng = random.Random(303)
        for _ in range(200):
            transcript, _, big = random_instance(rng)
            window = rng.randint(0, 2)
            first = filter_transcript(transcript, big, window)
            kept = sorted(first.retained)
            if not kept:
                continue
            compacted = make_transcript(
                "t1-filtered", [transcript.segments[i].text for i in kept]
            )
            second = filter_transcript(compacted, big, window)
            assert second.retained == frozenset(range(len(kept)))

    def test_matches_always_subset_of_retained(self):
        rng = random.Random(404)
        for _ in range(200):
            transcript, _, big = random_instance(rng)
            out = filter_transcript(transcript, big, rng.randint(0, 2))
            assert set(out.matches) <= out.retained

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_completeness_oracle_full_recall(self, seed):
        rng = random.Random(seed)
        transcript, _, _ = random_instance(rng)
        corpus = make_corpus([transcript])
        n = len(transcript.segments)
        gold = []
        for g in range(rng.randint(1, 4)):
            start = rng.randrange(n)
            end = min(n - 1, start + rng.randint(0, 2))
            gold.append(make_annotation("t1", start, end, annotation_id=f"g{g}"))
        full = completeness_list(corpus, gold)
        filtered = filter_corpus(corpus, full)
        assert recall_report(filtered, gold).recall == 1.0
